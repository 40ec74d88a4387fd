//! Position-aware question synthesis for long passages.
//!
//! A chat model summarizes each passage, then writes question/answer pairs
//! for every 256-word chunk. Each question inherits the segment tags of its
//! chunk.

mod pipeline;
mod prompts;

use std::collections::BTreeSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Benchmark, CorpusError, SegmentTag};
use crate::providers::ProviderError;

pub use pipeline::{build_fineweb_benchmark, FinewebBuild, PassageFailure, PosgenConfig, ResponseCache, StubChat};
pub use prompts::{
    generate_qa, parse_qa_response, summarize, AuditLog, AuditRecord, PromptTemplate, QaResponse, Summary,
    TemplateName, SUMMARY_WORD_LIMIT,
};

#[derive(Debug, Error)]
pub enum PosgenError {
    #[error("passage of {0} words is too short to split into thirds")]
    Degenerate(usize),
    #[error("invalid chunk span: start {start}, end {end}, total {total}")]
    InvalidSpan { start: usize, end: usize, total: usize },
    #[error("{stage} failed for passage {passage_id}: {source}")]
    Provider {
        stage: &'static str,
        passage_id: String,
        attempts: u32,
        #[source]
        source: ProviderError,
    },
    #[error("empty summary for passage {0}")]
    EmptySummary(String),
    #[error("cannot draw {requested} queries tagged {tag}: only {available} exist")]
    TagTooSmall {
        tag: SegmentTag,
        requested: usize,
        available: usize,
    },
    #[error("query {0} has no segment tags")]
    Untagged(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// A chunk's word range within its passage. `end_word` is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChunkSpan {
    pub total_words: usize,
    pub start_word: usize,
    pub end_word: usize,
}

impl ChunkSpan {
    pub fn new(total_words: usize, start_word: usize, end_word: usize) -> Result<Self, PosgenError> {
        if start_word > end_word || end_word >= total_words {
            return Err(PosgenError::InvalidSpan {
                start: start_word,
                end: end_word,
                total: total_words,
            });
        }
        Ok(Self {
            total_words,
            start_word,
            end_word,
        })
    }
}

/// Segment tags of a chunk, following the position-tagging algorithm
/// with `third = floor(z / 3)`.
///
/// A chunk reaching into all three thirds is tagged `{middle, end}`.
pub fn position_tags(span: &ChunkSpan) -> Result<Vec<SegmentTag>, PosgenError> {
    let ChunkSpan {
        total_words: z,
        start_word: m,
        end_word: n,
    } = *span;
    if z < 3 {
        return Err(PosgenError::Degenerate(z));
    }
    if m > n || n >= z {
        return Err(PosgenError::InvalidSpan { start: m, end: n, total: z });
    }
    let third = z / 3;
    use SegmentTag::*;
    Ok(if n < third {
        vec![Beginning]
    } else if m >= third && n < 2 * third {
        vec![Middle]
    } else if m >= 2 * third {
        vec![End]
    } else if n < 2 * third {
        vec![Beginning, Middle]
    } else {
        vec![Middle, End]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionType {
    Simple,
    Complicated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQA {
    pub question: String,
    pub answer: String,
    pub question_type: QuestionType,
    pub source_chunk: ChunkSpan,
    pub passage_id: String,
}

/// Draws `per_tag_n` queries uniformly from each tag's population and keeps
/// the union. Queries drawn under several tags appear once. Tags that no
/// query carries are skipped.
pub fn sample_by_tag(benchmark: &Benchmark, per_tag_n: usize, seed: u64) -> Result<Benchmark, PosgenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = BTreeSet::new();
    for tag in SegmentTag::ALL {
        let mut population = Vec::new();
        for (i, q) in benchmark.queries.iter().enumerate() {
            let tags = q.segment_tags.as_ref().ok_or_else(|| PosgenError::Untagged(q.id.clone()))?;
            if tags.contains(&tag) {
                population.push(i);
            }
        }
        if population.is_empty() {
            tracing::warn!(%tag, "no queries carry this tag");
            continue;
        }
        if per_tag_n > population.len() {
            return Err(PosgenError::TagTooSmall {
                tag,
                requested: per_tag_n,
                available: population.len(),
            });
        }
        chosen.extend(index::sample(&mut rng, population.len(), per_tag_n).into_iter().map(|j| population[j]));
    }
    Ok(Benchmark {
        name: format!("{}-tiny", benchmark.name),
        corpus: benchmark.corpus.clone(),
        queries: chosen.into_iter().map(|i| benchmark.queries[i].clone()).collect(),
        bin_scheme: benchmark.bin_scheme.clone(),
    })
}
