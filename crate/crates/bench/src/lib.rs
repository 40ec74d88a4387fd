//! Fixtures shared by the criterion benchmarks.

use myopic_core::providers::{SyntheticEmbedder, SyntheticMode};
use myopic_core::synth::{segment_benchmark, SegmentBenchConfig};
use myopic_core::{Benchmark, EmbeddingKind, EmbeddingRecord, Embedder, TextItem, VectorStore};

/// Seeded synthetic benchmark with `passages` passages and three queries each.
pub fn corpus(passages: usize) -> Benchmark {
    segment_benchmark(&SegmentBenchConfig {
        passages,
        seed: 11,
        ..Default::default()
    })
    .expect("synthetic benchmark builds")
}

/// Corpus store and query records from the uniform-average synthetic embedder.
pub fn vectors(bench: &Benchmark, kind: EmbeddingKind, dim: usize) -> (VectorStore, Vec<EmbeddingRecord>) {
    let mut embedder = SyntheticEmbedder::new(SyntheticMode::UniformAverage, dim, 11).expect("valid embedder");
    if kind == EmbeddingKind::Multivector {
        embedder = embedder.multivector();
    }
    let passages: Vec<TextItem> = bench.corpus.iter().map(|p| TextItem::new(&p.id, &p.text)).collect();
    let queries: Vec<TextItem> = bench.queries.iter().map(|q| TextItem::new(&q.id, &q.text)).collect();
    let store = VectorStore::new(kind, embedder.embed(&passages).expect("embeds"), true).expect("store builds");
    (store, embedder.embed(&queries).expect("embeds"))
}
