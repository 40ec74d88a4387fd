use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use myopic_bench::{corpus, vectors};
use myopic_core::dense::{colbert_search, dense_search};
use myopic_core::eval::{evaluate_by_group, ndcg_at_k};
use myopic_core::{Bm25Params, EmbeddingKind, InvertedIndex, RunResult};
use std::hint::black_box;

fn bm25(c: &mut Criterion) {
    let mut group = c.benchmark_group("bm25");
    for passages in [1_000, 5_000] {
        let bench = corpus(passages);
        let texts: Vec<&str> = bench.queries.iter().map(|q| q.text.as_str()).collect();
        group.bench_with_input(BenchmarkId::new("build", passages), &bench, |b, bench| {
            b.iter(|| InvertedIndex::build(black_box(&bench.corpus)).unwrap())
        });
        let index = InvertedIndex::build(&bench.corpus).unwrap();
        let params = Bm25Params::default();
        group.throughput(Throughput::Elements(texts.len() as u64));
        group.bench_with_input(BenchmarkId::new("search_many", passages), &texts, |b, texts| {
            b.iter(|| index.search_many(black_box(texts), &params, 100))
        });
    }
    group.finish();
}

fn dense(c: &mut Criterion) {
    let bench = corpus(2_000);
    let mut group = c.benchmark_group("dense");
    let (store, queries) = vectors(&bench, EmbeddingKind::Dense, 256);
    group.bench_function("cosine_top100", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % queries.len();
            dense_search(black_box(&queries[i]), &store, 100).unwrap()
        })
    });
    let (store, queries) = vectors(&bench, EmbeddingKind::Multivector, 64);
    group.bench_function("maxsim_top100", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % queries.len();
            colbert_search(black_box(&queries[i]), &store, 100).unwrap()
        })
    });
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let bench = corpus(2_000);
    let index = InvertedIndex::build(&bench.corpus).unwrap();
    let texts: Vec<&str> = bench.queries.iter().map(|q| q.text.as_str()).collect();
    let mut run = RunResult::new("bm25");
    for (q, ranked) in bench.queries.iter().zip(index.search_many(&texts, &Bm25Params::default(), 100)) {
        run.insert(q.id.clone(), ranked);
    }
    let mut group = c.benchmark_group("eval");
    let ranked: Vec<String> = (0..100).map(|i| format!("p{i}")).collect();
    let relevant = vec!["p37".to_string()];
    group.bench_function("ndcg_at_10", |b| b.iter(|| ndcg_at_k(black_box(&ranked), &relevant, 10).unwrap()));
    group.throughput(Throughput::Elements(bench.queries.len() as u64));
    group.bench_function("evaluate_by_group", |b| b.iter(|| evaluate_by_group(black_box(&run), &bench, 10).unwrap()));
    group.finish();
}

criterion_group!(benches, bm25, dense, evaluation);
criterion_main!(benches);
