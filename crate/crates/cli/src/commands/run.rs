use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use myopic_core::dense::{colbert_search, dense_search, rerank_stage};
use myopic_core::providers::{read_embeddings_jsonl, HttpReranker, HttpTransport, OverlapReranker};
use myopic_core::{
    Benchmark, Bm25Params, Candidates, DenseError, EmbeddingKind, EmbeddingRecord, InvertedIndex, Reranker, RunResult,
    VectorStore,
};
use rayon::prelude::*;

use super::embed::{embed_corpus, embed_queries};
use super::{build_embedder, read_bundle, require_file};
use crate::args::{RunArgs, Scorer};
use crate::config::Settings;
use crate::exit::{InputError, PartialFailure};

pub const DEFAULT_RUN_K: usize = 100;
pub const DEFAULT_TOP_N: usize = 100;

impl Scorer {
    pub fn name(self) -> &'static str {
        match self {
            Scorer::Bm25 => "bm25",
            Scorer::Dense => "dense",
            Scorer::Colbert => "colbert",
            Scorer::RerankOverBm25 => "rerank-over-bm25",
            Scorer::RerankOverDense => "rerank-over-dense",
            Scorer::RerankOverColbert => "rerank-over-colbert",
        }
    }

    fn first_stage(self) -> Scorer {
        match self {
            Scorer::RerankOverBm25 => Scorer::Bm25,
            Scorer::RerankOverDense => Scorer::Dense,
            Scorer::RerankOverColbert => Scorer::Colbert,
            other => other,
        }
    }

    fn reranks(self) -> bool {
        self.first_stage() != self
    }
}

fn bm25_stage(bench: &Benchmark, args: &RunArgs, k: usize) -> Result<Vec<Candidates>> {
    let params = Bm25Params::new(args.k1.unwrap_or(1.2), args.b.unwrap_or(0.75))
        .map_err(|e| InputError::new(e.to_string()))?;
    let index = InvertedIndex::build(&bench.corpus)?;
    let texts: Vec<&str> = bench.queries.iter().map(|q| q.text.as_str()).collect();
    Ok(bench
        .queries
        .iter()
        .zip(index.search_many(&texts, &params, k))
        .map(|(q, ranked)| Candidates {
            query_id: q.id.clone(),
            ranked,
        })
        .collect())
}

fn load_vectors(
    bench: &Benchmark,
    args: &RunArgs,
    settings: &Settings,
    kind: EmbeddingKind,
) -> Result<(VectorStore, Vec<EmbeddingRecord>)> {
    let normalize = !args.no_normalize;
    match &args.vectors {
        Some(dir) => {
            let (corpus, queries) = (dir.join("corpus.jsonl"), dir.join("queries.jsonl"));
            require_file(&corpus)?;
            require_file(&queries)?;
            let store = VectorStore::from_jsonl(&corpus, kind, normalize)
                .with_context(|| format!("loading {}", corpus.display()))?;
            let queries = read_embeddings_jsonl(&queries, kind)?;
            Ok((store, queries))
        }
        None => {
            let embedder = build_embedder(&args.embedder, settings, kind)?;
            let store = VectorStore::new(kind, embed_corpus(bench, embedder.as_ref())?, normalize)?;
            let queries = embed_queries(bench, embedder.as_ref())?;
            super::embed::report_usage(embedder.as_ref());
            Ok((store, queries))
        }
    }
}

fn vector_stage(bench: &Benchmark, args: &RunArgs, settings: &Settings, k: usize) -> Result<Vec<Candidates>> {
    let colbert = args.scorer.first_stage() == Scorer::Colbert;
    let kind = if colbert { EmbeddingKind::Multivector } else { EmbeddingKind::Dense };
    let (store, query_records) = load_vectors(bench, args, settings, kind)?;
    let by_id: HashMap<&str, &EmbeddingRecord> = query_records.iter().map(|r| (r.item_id.as_str(), r)).collect();
    bench
        .queries
        .par_iter()
        .map(|q| {
            let record = by_id
                .get(q.id.as_str())
                .ok_or_else(|| InputError::new(format!("no vector for query {}", q.id)))?;
            let found = if colbert {
                colbert_search(record, &store, k)
            } else {
                dense_search(record, &store, k)
            };
            found.with_context(|| format!("searching for query {}", q.id))
        })
        .collect()
}

fn build_reranker(args: &RunArgs, settings: &Settings) -> Result<Box<dyn Reranker>> {
    let spec = settings
        .pick(args.reranker.clone(), settings.file.reranker.clone(), "RERANKER")?
        .ok_or_else(|| InputError::new("rerank scorers need --reranker stub or --reranker http"))?;
    match spec.as_str() {
        "stub" => Ok(Box::new(OverlapReranker)),
        "http" => {
            let config = settings.provider("rerank")?;
            let transport = Arc::new(HttpTransport::new(&config)?);
            Ok(Box::new(HttpReranker::new(config, transport)?))
        }
        other => Err(InputError::new(format!("unknown reranker {other:?}; expected stub or http")).into()),
    }
}

/// Reranks every query's candidates; a failed query keeps its first-stage ranking.
fn rerank_all(
    bench: &Benchmark,
    first: Vec<Candidates>,
    reranker: &dyn Reranker,
    top_n: usize,
) -> (Vec<Candidates>, Vec<String>) {
    let texts: HashMap<&str, &str> = bench.corpus.iter().map(|p| (p.id.as_str(), p.text.as_str())).collect();
    let results: Vec<(Candidates, Option<String>)> = bench
        .queries
        .par_iter()
        .zip(first)
        .map(|(q, cands)| {
            let n = top_n.min(cands.len());
            match rerank_stage(&cands, &q.text, &texts, reranker, n) {
                Ok(reranked) => (reranked, None),
                Err(DenseError::Rerank { first_stage, source }) => {
                    tracing::warn!(query = %q.id, "rerank failed, keeping first-stage order: {source}");
                    (*first_stage, Some(q.id.clone()))
                }
                Err(e) => {
                    tracing::warn!(query = %q.id, "rerank failed, keeping first-stage order: {e}");
                    (cands, Some(q.id.clone()))
                }
            }
        })
        .collect();
    let mut failed = Vec::new();
    let mut out = Vec::with_capacity(results.len());
    for (c, f) in results {
        out.push(c);
        failed.extend(f);
    }
    (out, failed)
}

pub fn run(args: &RunArgs, settings: &Settings) -> Result<()> {
    let bench = read_bundle(&args.bundle)?;
    let k = settings.k(args.k, DEFAULT_RUN_K)?;
    if k == 0 {
        return Err(InputError::new("--k must be at least 1").into());
    }
    let reranker = args.scorer.reranks().then(|| build_reranker(args, settings)).transpose()?;
    let top_n = settings.pick(args.top_n, settings.file.top_n, "TOP_N")?.unwrap_or(DEFAULT_TOP_N);
    let depth = if reranker.is_some() { k.max(top_n) } else { k };

    let first = match args.scorer.first_stage() {
        Scorer::Bm25 => bm25_stage(&bench, args, depth)?,
        _ => vector_stage(&bench, args, settings, depth)?,
    };
    let (ranked, failed) = match &reranker {
        Some(r) => rerank_all(&bench, first, r.as_ref(), top_n),
        None => (first, Vec::new()),
    };

    let tag = args.tag.clone().unwrap_or_else(|| args.scorer.name().to_string());
    let mut result = RunResult::new(tag);
    for c in ranked {
        result.insert(c.query_id, c.ranked.into_iter().take(k));
    }
    write_run(&result, &args.out)?;
    println!("queries={} k={k} tag={}", result.query_count(), result.tag);
    if !failed.is_empty() {
        return Err(PartialFailure(format!(
            "reranking failed for {} queries; their first-stage rankings were written",
            failed.len()
        ))
        .into());
    }
    Ok(())
}

fn write_run(result: &RunResult, path: &Path) -> Result<()> {
    super::write_output(path, result.to_trec_string())
}
