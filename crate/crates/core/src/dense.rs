//! Cosine and MaxSim scoring, exact top-k search and second-stage reranking.
//!
//! Search is brute force over the whole store. The store is split into
//! shards scored in parallel; each shard keeps its own top k and the shard
//! results are merged under a total order (score descending, passage id
//! ascending), so the output does not depend on how the work was split.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::providers::{read_embeddings_jsonl, EmbeddingKind, EmbeddingRecord, ProviderError, Reranker};

#[derive(Debug, Error)]
pub enum DenseError {
    #[error("zero vector{}", .0.as_ref().map(|id| format!(" for {id}")).unwrap_or_default())]
    ZeroVector(Option<String>),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("expected {expected:?} embeddings, found {found:?}")]
    KindMismatch { expected: EmbeddingKind, found: EmbeddingKind },
    #[error("duplicate item id {0}")]
    DuplicateId(String),
    #[error("vector store is empty")]
    EmptyStore,
    #[error("top_n {top_n} exceeds the {available} candidates")]
    TopNTooLarge { top_n: usize, available: usize },
    #[error("no text for passage {0}")]
    MissingText(String),
    #[error("reranking failed for query {}: {source}", first_stage.query_id)]
    Rerank {
        /// The untouched first-stage ranking.
        first_stage: Box<Candidates>,
        #[source]
        source: ProviderError,
    },
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// A ranked candidate list for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidates {
    pub query_id: String,
    /// `(passage_id, score)`, best first.
    pub ranked: Vec<(String, f64)>,
}

impl Candidates {
    pub fn ids(&self) -> Vec<&str> {
        self.ranked.iter().map(|(id, _)| id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }
}

fn rank_order(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

const LANES: usize = 8;

/// Dot product accumulated in `f64` over eight interleaved lanes.
pub fn dot(u: &[f32], v: &[f32]) -> f64 {
    let n = u.len().min(v.len());
    let (u, v) = (&u[..n], &v[..n]);
    let mut acc = [0.0f64; LANES];
    let (uc, vc) = (u.chunks_exact(LANES), v.chunks_exact(LANES));
    let tail: f64 = uc
        .remainder()
        .iter()
        .zip(vc.remainder())
        .fold(0.0, |s, (&a, &b)| s + a as f64 * b as f64);
    for (a, b) in uc.zip(vc) {
        for i in 0..LANES {
            acc[i] += a[i] as f64 * b[i] as f64;
        }
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

fn check_dim(expected: usize, found: usize) -> Result<(), DenseError> {
    if expected != found {
        return Err(DenseError::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64, DenseError> {
    check_dim(u.len(), v.len())?;
    let (nu, nv) = (dot(u, u).sqrt(), dot(v, v).sqrt());
    if nu == 0.0 || nv == 0.0 {
        return Err(DenseError::ZeroVector(None));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Sum over query rows of the best dot product with any document row.
///
/// Both inputs are row-major with `dim` columns. The row maxima are summed in
/// ascending order, so the result is bit-identical under any reordering of
/// either input's rows.
pub fn maxsim_rows(query: &[f32], doc: &[f32], dim: usize) -> f64 {
    let mut best: Vec<f64> = query
        .chunks_exact(dim)
        .map(|q| doc.chunks_exact(dim).map(|d| dot(q, d)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    best.sort_unstable_by(f64::total_cmp);
    best.into_iter().sum()
}

/// MaxSim between token-level records, using their rows as stored.
pub fn maxsim(query: &EmbeddingRecord, doc: &EmbeddingRecord) -> Result<f64, DenseError> {
    check_dim(query.dim, doc.dim)?;
    Ok(maxsim_rows(&query.data, &doc.data, query.dim))
}

/// Immutable embeddings for a corpus, all of one kind and dimension.
#[derive(Debug, Clone)]
pub struct VectorStore {
    kind: EmbeddingKind,
    dim: usize,
    normalize_rows: bool,
    /// Sorted by item id.
    records: Vec<EmbeddingRecord>,
    /// Dense vector L2 norms, index-aligned with `records`.
    norms: Vec<f64>,
}

impl VectorStore {
    /// Builds a store. Multivector rows are scaled to unit length when
    /// `normalize_rows` is set; dense vectors are always compared by cosine.
    pub fn new(kind: EmbeddingKind, mut records: Vec<EmbeddingRecord>, normalize_rows: bool) -> Result<Self, DenseError> {
        let dim = records.first().ok_or(DenseError::EmptyStore)?.dim;
        records.sort_by(|a, b| a.item_id.cmp(&b.item_id));
        if let Some(w) = records.windows(2).find(|w| w[0].item_id == w[1].item_id) {
            return Err(DenseError::DuplicateId(w[0].item_id.clone()));
        }
        let mut norms = Vec::with_capacity(records.len());
        for r in &mut records {
            if r.kind != kind {
                return Err(DenseError::KindMismatch { expected: kind, found: r.kind });
            }
            check_dim(dim, r.dim)?;
            if kind == EmbeddingKind::Multivector && normalize_rows && !r.normalized {
                r.normalize();
            }
            let norm = dot(&r.data, &r.data).sqrt();
            if kind == EmbeddingKind::Dense && norm == 0.0 {
                return Err(DenseError::ZeroVector(Some(r.item_id.clone())));
            }
            norms.push(norm);
        }
        Ok(Self {
            kind,
            dim,
            normalize_rows,
            records,
            norms,
        })
    }

    pub fn from_jsonl(path: &Path, kind: EmbeddingKind, normalize_rows: bool) -> Result<Self, DenseError> {
        Self::new(kind, read_embeddings_jsonl(path, kind)?, normalize_rows)
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, item_id: &str) -> Option<&EmbeddingRecord> {
        self.records
            .binary_search_by(|r| r.item_id.as_str().cmp(item_id))
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    fn check_query(&self, query: &EmbeddingRecord) -> Result<(), DenseError> {
        if query.kind != self.kind {
            return Err(DenseError::KindMismatch {
                expected: self.kind,
                found: query.kind,
            });
        }
        check_dim(self.dim, query.dim)
    }

    /// Top `k` by `score`, computed over shards of `shard_size` records.
    fn top_k(&self, k: usize, shard_size: usize, score: impl Fn(usize) -> f64 + Sync) -> Vec<(String, f64)> {
        let shard_size = shard_size.max(1);
        let shards: Vec<Vec<(String, f64)>> = (0..self.records.len())
            .collect::<Vec<_>>()
            .par_chunks(shard_size)
            .map(|idx| {
                let mut local: Vec<(usize, f64)> = idx.iter().map(|&i| (i, score(i))).collect();
                // ids are sorted, so index order breaks ties by id
                local.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                local.truncate(k);
                local.into_iter().map(|(i, s)| (self.records[i].item_id.clone(), s)).collect()
            })
            .collect();
        let mut merged: Vec<(String, f64)> = shards.into_iter().flatten().collect();
        merged.sort_by(rank_order);
        merged.truncate(k);
        merged
    }

    fn default_shard_size(&self) -> usize {
        self.records.len().div_ceil(rayon::current_num_threads() * 4).max(64)
    }
}

/// Exact top-`k` passages by cosine similarity.
pub fn dense_search(query: &EmbeddingRecord, store: &VectorStore, k: usize) -> Result<Candidates, DenseError> {
    dense_search_sharded(query, store, k, store.default_shard_size())
}

/// [`dense_search`] with an explicit shard size.
pub fn dense_search_sharded(
    query: &EmbeddingRecord,
    store: &VectorStore,
    k: usize,
    shard_size: usize,
) -> Result<Candidates, DenseError> {
    store.check_query(query)?;
    let qnorm = dot(&query.data, &query.data).sqrt();
    if qnorm == 0.0 {
        return Err(DenseError::ZeroVector(Some(query.item_id.clone())));
    }
    let ranked = store.top_k(k, shard_size, |i| {
        (dot(&query.data, &store.records[i].data) / (qnorm * store.norms[i])).clamp(-1.0, 1.0)
    });
    Ok(Candidates {
        query_id: query.item_id.clone(),
        ranked,
    })
}

/// Exact top-`k` passages by MaxSim.
///
/// The query rows are normalized the same way as the store's rows.
pub fn colbert_search(query: &EmbeddingRecord, store: &VectorStore, k: usize) -> Result<Candidates, DenseError> {
    colbert_search_sharded(query, store, k, store.default_shard_size())
}

/// [`colbert_search`] with an explicit shard size.
pub fn colbert_search_sharded(
    query: &EmbeddingRecord,
    store: &VectorStore,
    k: usize,
    shard_size: usize,
) -> Result<Candidates, DenseError> {
    store.check_query(query)?;
    let mut q = query.clone();
    if store.normalize_rows && !q.normalized {
        q.normalize();
    }
    let ranked = store.top_k(k, shard_size, |i| maxsim_rows(&q.data, &store.records[i].data, store.dim));
    Ok(Candidates {
        query_id: query.item_id.clone(),
        ranked,
    })
}

/// Rescores the first `top_n` candidates with `reranker`.
///
/// The reranked block is sorted by the new scores. Candidates below it keep
/// their first-stage order; their scores are shifted by a constant so that
/// the whole list stays non-increasing.
pub fn rerank_stage(
    candidates: &Candidates,
    query_text: &str,
    passage_texts: &HashMap<&str, &str>,
    reranker: &dyn Reranker,
    top_n: usize,
) -> Result<Candidates, DenseError> {
    if top_n > candidates.len() {
        return Err(DenseError::TopNTooLarge {
            top_n,
            available: candidates.len(),
        });
    }
    let (head, tail) = candidates.ranked.split_at(top_n);
    let texts = head
        .iter()
        .map(|(id, _)| passage_texts.get(id.as_str()).copied().ok_or_else(|| DenseError::MissingText(id.clone())))
        .collect::<Result<Vec<&str>, _>>()?;
    let fail = |source| DenseError::Rerank {
        first_stage: Box::new(candidates.clone()),
        source,
    };
    let scores = if texts.is_empty() {
        Vec::new()
    } else {
        reranker.rerank(query_text, &texts).map_err(fail)?
    };
    if scores.len() != head.len() {
        return Err(fail(ProviderError::InvalidResponse(format!(
            "reranker returned {} scores for {} passages",
            scores.len(),
            head.len()
        ))));
    }
    let mut ranked: Vec<(String, f64)> = head.iter().map(|(id, _)| id.clone()).zip(scores).collect();
    ranked.sort_by(rank_order);
    if let (Some(head_min), Some((_, tail_top))) = (ranked.last().map(|(_, s)| *s), tail.first()) {
        let shift = tail_top - head_min + 1.0;
        ranked.extend(tail.iter().map(|(id, s)| (id.clone(), s - shift)));
    } else {
        ranked.extend(tail.iter().cloned());
    }
    Ok(Candidates {
        query_id: candidates.query_id.clone(),
        ranked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(id: &str, v: &[f32]) -> EmbeddingRecord {
        EmbeddingRecord::from_rows(id, EmbeddingKind::Dense, &[v.to_vec()]).unwrap()
    }

    fn multi(id: &str, rows: &[Vec<f32>]) -> EmbeddingRecord {
        EmbeddingRecord::from_rows(id, EmbeddingKind::Multivector, rows).unwrap()
    }

    fn random_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f32>> {
        (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect()).collect()
    }

    #[test]
    fn cosine_examples() {
        let v = [0.3f32, -1.2, 4.0];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - 0.70710678).abs() < 1e-8);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(DenseError::ZeroVector(_))));
        assert!(matches!(cosine(&[1.0], &[1.0, 0.0]), Err(DenseError::DimensionMismatch { .. })));
    }

    #[test]
    fn maxsim_examples() {
        let q = multi("q", &[vec![1.0, 0.0]]);
        let d = multi("d", &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(maxsim(&q, &d).unwrap(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut same = multi("s", &random_rows(&mut rng, 7, 16));
        same.normalize();
        assert!((maxsim(&same, &same).unwrap() - 7.0).abs() < 1e-6);
        assert!(maxsim(&q, &multi("x", &[vec![1.0, 0.0, 0.0]])).is_err());
    }

    #[test]
    fn single_rows_make_scorers_coincide() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let rows = random_rows(&mut rng, 2, 12);
            let (mut a, mut b) = (multi("a", &rows[..1]), multi("b", &rows[1..]));
            a.normalize();
            b.normalize();
            let m = maxsim(&a, &b).unwrap();
            assert!((m - dot(&a.data, &b.data)).abs() < 1e-12);
            assert!((m - cosine(&a.data, &b.data).unwrap()).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn maxsim_is_order_free_and_monotone(seed in any::<u64>(), tq in 1usize..6, td in 1usize..8, extra in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_rows(&mut rng, tq, 8);
            let d = random_rows(&mut rng, td, 8);
            let base = maxsim(&multi("q", &q), &multi("d", &d)).unwrap();
            let mut dp = d.clone();
            dp.reverse();
            dp.rotate_left(td / 2);
            let mut qp = q.clone();
            qp.reverse();
            let permuted = maxsim(&multi("q", &qp), &multi("d", &dp)).unwrap();
            prop_assert_eq!(base.to_bits(), permuted.to_bits());
            let mut more = d.clone();
            more.extend(random_rows(&mut rng, extra, 8));
            prop_assert!(maxsim(&multi("q", &q), &multi("d", &more)).unwrap() >= base);
        }
    }

    fn dense_store(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> VectorStore {
        let records = random_rows(rng, n, dim)
            .into_iter()
            .enumerate()
            .map(|(i, v)| dense(&format!("p{i:03}"), &v))
            .collect();
        VectorStore::new(EmbeddingKind::Dense, records, true).unwrap()
    }

    #[test]
    fn dense_search_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let store = dense_store(&mut rng, 100, 32);
        for _ in 0..20 {
            let qv = random_rows(&mut rng, 1, 32).remove(0);
            let query = dense("q", &qv);
            let got = dense_search(&query, &store, 10).unwrap();
            // O(N·d) oracle straight from the definition
            let mut want: Vec<(String, f64)> = store
                .records()
                .iter()
                .map(|r| {
                    let (mut uv, mut uu, mut vv) = (0.0f64, 0.0f64, 0.0f64);
                    for j in 0..32 {
                        let (a, b) = (qv[j] as f64, r.data[j] as f64);
                        uv += a * b;
                        uu += a * a;
                        vv += b * b;
                    }
                    (r.item_id.clone(), uv / (uu.sqrt() * vv.sqrt()))
                })
                .collect();
            want.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            assert_eq!(got.ids(), want[..10].iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>());
            for ((_, g), (_, w)) in got.ranked.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn own_vector_ranks_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let store = dense_store(&mut rng, 50, 16);
        let me = store.get("p017").unwrap().clone();
        let got = dense_search(&me, &store, store.len()).unwrap();
        assert_eq!(got.ranked[0].0, "p017");
        assert!((got.ranked[0].1 - 1.0).abs() < 1e-12);
        assert_eq!(got.len(), 50);
        let mut ids = got.ids();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 50);
    }

    #[test]
    fn ties_break_by_passage_id() {
        let records = vec![dense("c", &[1.0, 0.0]), dense("a", &[2.0, 0.0]), dense("b", &[0.0, 1.0])];
        let store = VectorStore::new(EmbeddingKind::Dense, records, true).unwrap();
        let got = dense_search(&dense("q", &[1.0, 0.0]), &store, 3).unwrap();
        assert_eq!(got.ids(), ["a", "c", "b"]);
    }

    #[test]
    fn store_rejects_bad_input() {
        assert!(matches!(VectorStore::new(EmbeddingKind::Dense, vec![], true), Err(DenseError::EmptyStore)));
        let dup = vec![dense("a", &[1.0]), dense("a", &[2.0])];
        assert!(matches!(VectorStore::new(EmbeddingKind::Dense, dup, true), Err(DenseError::DuplicateId(_))));
        let mixed = vec![dense("a", &[1.0]), dense("b", &[1.0, 2.0])];
        assert!(VectorStore::new(EmbeddingKind::Dense, mixed, true).is_err());
        let zero = vec![dense("a", &[0.0, 0.0])];
        assert!(matches!(VectorStore::new(EmbeddingKind::Dense, zero, true), Err(DenseError::ZeroVector(_))));
        let store = VectorStore::new(EmbeddingKind::Dense, vec![dense("a", &[1.0])], true).unwrap();
        assert!(matches!(
            colbert_search(&multi("q", &[vec![1.0]]), &store, 1),
            Err(DenseError::KindMismatch { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn sharding_never_changes_results(seed in any::<u64>(), shard in 1usize..80, k in 1usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let store = dense_store(&mut rng, 75, 8);
            let q = dense("q", &random_rows(&mut rng, 1, 8)[0]);
            let whole = dense_search_sharded(&q, &store, k, 1000).unwrap();
            prop_assert_eq!(dense_search_sharded(&q, &store, k, shard).unwrap(), whole);

            let records: Vec<EmbeddingRecord> = (0..40)
                .map(|i| {
                    let n = rng.gen_range(1..6);
                    multi(&format!("d{i:02}"), &random_rows(&mut rng, n, 8))
                })
                .collect();
            let mstore = VectorStore::new(EmbeddingKind::Multivector, records, true).unwrap();
            let mq = multi("q", &random_rows(&mut rng, 3, 8));
            let whole = colbert_search_sharded(&mq, &mstore, k, 1000).unwrap();
            prop_assert_eq!(colbert_search_sharded(&mq, &mstore, k, shard).unwrap(), whole);
        }
    }

    #[test]
    fn colbert_matches_double_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let docs: Vec<Vec<Vec<f32>>> = (0..25).map(|i| random_rows(&mut rng, 1 + i % 5, 6)).collect();
        let records = docs.iter().enumerate().map(|(i, d)| multi(&format!("d{i:02}"), d)).collect();
        let store = VectorStore::new(EmbeddingKind::Multivector, records, false).unwrap();
        let q = random_rows(&mut rng, 4, 6);
        let got = colbert_search(&multi("q", &q), &store, 25).unwrap();
        let mut want: Vec<(String, f64)> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let mut total = 0.0;
                for qr in &q {
                    let mut best = f64::MIN;
                    for dr in d {
                        let mut s = 0.0;
                        for j in 0..6 {
                            s += qr[j] as f64 * dr[j] as f64;
                        }
                        best = best.max(s);
                    }
                    total += best;
                }
                (format!("d{i:02}"), total)
            })
            .collect();
        want.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        assert_eq!(got.ids(), want.iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>());
    }

    #[test]
    fn exact_token_match_ranks_first() {
        let records = vec![
            multi("a", &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]),
            multi("b", &[vec![0.6, 0.8, 0.0], vec![1.0, 0.0, 0.0]]),
        ];
        let store = VectorStore::new(EmbeddingKind::Multivector, records, true).unwrap();
        let got = colbert_search(&multi("q", &[vec![1.0, 0.0, 0.0]]), &store, 2).unwrap();
        assert_eq!(got.ranked[0], ("b".to_string(), 1.0));
    }

    struct FixedScores(Vec<f64>);

    impl Reranker for FixedScores {
        fn rerank(&self, _query: &str, passages: &[&str]) -> Result<Vec<f64>, ProviderError> {
            Ok(self.0[..passages.len()].to_vec())
        }
    }

    struct Down;

    impl Reranker for Down {
        fn rerank(&self, _query: &str, _passages: &[&str]) -> Result<Vec<f64>, ProviderError> {
            Err(ProviderError::Timeout)
        }
    }

    fn first_stage() -> (Candidates, HashMap<&'static str, &'static str>) {
        let ranked = (0..6).map(|i| (format!("p{i}"), 10.0 - i as f64)).collect();
        let texts = [("p0", "t0"), ("p1", "t1"), ("p2", "t2"), ("p3", "t3"), ("p4", "t4"), ("p5", "t5")]
            .into_iter()
            .collect();
        (
            Candidates {
                query_id: "q".into(),
                ranked,
            },
            texts,
        )
    }

    #[test]
    fn identity_rerank_keeps_order() {
        let (c, texts) = first_stage();
        let scores: Vec<f64> = c.ranked.iter().map(|(_, s)| *s).collect();
        let out = rerank_stage(&c, "q", &texts, &FixedScores(scores), 6).unwrap();
        assert_eq!(out, c);
    }

    #[test]
    fn reversed_head_tail_untouched() {
        let (c, texts) = first_stage();
        let out = rerank_stage(&c, "q", &texts, &FixedScores(vec![1.0, 2.0, 3.0]), 3).unwrap();
        assert_eq!(out.ids(), ["p2", "p1", "p0", "p3", "p4", "p5"]);
        assert!(out.ranked.windows(2).all(|w| w[0].1 >= w[1].1));
        assert_eq!(out.ranked[3].1 - out.ranked[4].1, 1.0);
    }

    #[test]
    fn failure_preserves_first_stage() {
        let (c, texts) = first_stage();
        match rerank_stage(&c, "q", &texts, &Down, 3) {
            Err(DenseError::Rerank { first_stage, .. }) => assert_eq!(*first_stage, c),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            rerank_stage(&c, "q", &texts, &Down, 7),
            Err(DenseError::TopNTooLarge { .. })
        ));
    }
}
