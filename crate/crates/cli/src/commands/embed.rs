use anyhow::{Context, Result};
use myopic_core::providers::write_embeddings_jsonl;
use myopic_core::{Benchmark, EmbeddingKind, EmbeddingRecord, Embedder, TextItem};

use super::{build_embedder, read_bundle};
use crate::args::{EmbedFetchArgs, VectorKind};
use crate::config::Settings;

impl From<VectorKind> for EmbeddingKind {
    fn from(kind: VectorKind) -> Self {
        match kind {
            VectorKind::Dense => EmbeddingKind::Dense,
            VectorKind::Multivector => EmbeddingKind::Multivector,
        }
    }
}

pub fn embed_corpus(bench: &Benchmark, embedder: &dyn Embedder) -> Result<Vec<EmbeddingRecord>> {
    let items: Vec<TextItem> = bench.corpus.iter().map(|p| TextItem::new(&p.id, &p.text)).collect();
    embedder.embed(&items).context("embedding corpus")
}

pub fn embed_queries(bench: &Benchmark, embedder: &dyn Embedder) -> Result<Vec<EmbeddingRecord>> {
    let items: Vec<TextItem> = bench.queries.iter().map(|q| TextItem::new(&q.id, &q.text)).collect();
    embedder.embed(&items).context("embedding queries")
}

pub fn fetch(args: &EmbedFetchArgs, settings: &Settings) -> Result<()> {
    let bench = read_bundle(&args.bundle)?;
    let embedder = build_embedder(&args.embedder, settings, args.kind.into())?;
    let corpus = embed_corpus(&bench, embedder.as_ref())?;
    let queries = embed_queries(&bench, embedder.as_ref())?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_embeddings_jsonl(&args.out.join("corpus.jsonl"), &corpus)?;
    write_embeddings_jsonl(&args.out.join("queries.jsonl"), &queries)?;
    println!("passages={} queries={} dim={}", corpus.len(), queries.len(), corpus.first().map_or(0, |r| r.dim));
    report_usage(embedder.as_ref());
    Ok(())
}

/// Prints provider token usage, for embedders that report it.
pub fn report_usage(embedder: &dyn Embedder) {
    if let Some(tokens) = embedder.tokens_used() {
        println!("provider_tokens={tokens}");
    }
}
