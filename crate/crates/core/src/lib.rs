//! Position-aware retrieval benchmarks and positional-bias measurement.
//!
//! The crate is organised along the retrieval pipeline:
//!
//! - [`corpus`]: SQuAD-style span data to benchmarks, position bins, length
//!   filtering, word chunking, Tiny sampling and the on-disk bundle format.
//! - [`posgen`]: LLM-driven question synthesis for long passages and
//!   beginning/middle/end segment tagging.
//! - [`providers`]: embedding, reranker and chat clients with batching,
//!   retries and a content-addressed disk cache, plus synthetic embedders.
//! - [`sparse`]: a BM25 engine (tokenizer, inverted index, top-k search).
//! - [`dense`]: cosine and MaxSim scoring, exact top-k search and reranking.
//! - [`eval`]: TREC run/qrels I/O, NDCG@k per position group and reports.
//! - [`diagnose`]: full-text versus segment embedding similarity.
//! - [`synth`]: seeded synthetic benchmarks with planted evidence positions.

pub mod corpus;
pub mod dense;
pub mod diagnose;
pub mod eval;
pub mod posgen;
pub mod providers;
pub mod sparse;
pub mod synth;
pub mod text;

pub use corpus::{
    BinScheme, Benchmark, CorpusError, Passage, PositionedQuery, SegmentTag, TextChunk,
};
pub use dense::{Candidates, DenseError, VectorStore};
pub use eval::{EvalError, EvalReport, GroupScore, RunResult};
pub use posgen::{ChunkSpan, GeneratedQA, PosgenError, PromptTemplate, QuestionType};
pub use providers::{
    ChatModel, EmbeddingKind, EmbeddingRecord, Embedder, ProviderConfig, ProviderError, Reranker,
    TextItem,
};
pub use sparse::{Bm25Params, InvertedIndex, SparseError};
