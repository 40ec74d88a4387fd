use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Benchmark, CorpusError, Passage};

/// Uniform sample of `n` queries without replacement; the corpus is kept.
///
/// Sampled queries keep their original relative order. The generator is
/// ChaCha8 seeded from `seed`, so samples are identical across platforms.
pub fn sample_tiny(benchmark: &Benchmark, n: usize, seed: u64) -> Result<Benchmark, CorpusError> {
    let available = benchmark.queries.len();
    if n > available {
        return Err(CorpusError::SampleTooLarge {
            requested: n,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, available, n).into_vec();
    picked.sort_unstable();
    Ok(Benchmark {
        name: format!("{}-tiny", benchmark.name),
        corpus: benchmark.corpus.clone(),
        queries: picked.into_iter().map(|i| benchmark.queries[i].clone()).collect(),
        bin_scheme: benchmark.bin_scheme.clone(),
    })
}

/// Passages whose word count lies in `[min_words, max_words]`.
pub fn filter_by_length(passages: &[Passage], min_words: usize, max_words: usize) -> Vec<Passage> {
    assert!(min_words <= max_words, "min_words must not exceed max_words");
    passages
        .iter()
        .filter(|p| (min_words..=max_words).contains(&p.word_count))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PositionedQuery;
    use std::collections::HashSet;

    fn bench(n: usize) -> Benchmark {
        Benchmark {
            name: "full".into(),
            corpus: vec![Passage::new("p0", "some passage text")],
            queries: (0..n)
                .map(|i| PositionedQuery {
                    id: format!("q{i}"),
                    text: format!("question {i}"),
                    answer_start: Some(i % 10),
                    segment_tags: None,
                    relevant_passage_ids: vec!["p0".into()],
                })
                .collect(),
            bin_scheme: None,
        }
    }

    #[test]
    fn sample_is_deterministic_and_keeps_corpus() {
        let full = bench(500);
        let a = sample_tiny(&full, 50, 7).unwrap();
        let b = sample_tiny(&full, 50, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.queries.len(), 50);
        assert_eq!(a.corpus, full.corpus);
        let ids: HashSet<_> = a.queries.iter().map(|q| &q.id).collect();
        assert_eq!(ids.len(), 50);
        assert_ne!(a.queries, sample_tiny(&full, 50, 8).unwrap().queries);
    }

    #[test]
    fn full_size_sample_is_the_whole_set() {
        let full = bench(40);
        let s = sample_tiny(&full, 40, 1).unwrap();
        assert_eq!(s.queries, full.queries);
    }

    #[test]
    fn oversampling_is_an_error() {
        assert!(matches!(
            sample_tiny(&bench(3), 4, 0),
            Err(CorpusError::SampleTooLarge { requested: 4, available: 3 })
        ));
    }

    #[test]
    fn frozen_sample_for_seed() {
        // pins the generator and index-sampling algorithm
        let s = sample_tiny(&bench(20), 5, 42).unwrap();
        let ids: Vec<_> = s.queries.iter().map(|q| q.id.as_str()).collect();
        assert_eq!(ids, FROZEN_SEED_42);
    }
    const FROZEN_SEED_42: [&str; 5] = ["q2", "q6", "q14", "q16", "q19"];

    #[test]
    fn length_filter_is_inclusive() {
        let words = |n: usize| vec!["w"; n].join(" ");
        let ps = vec![
            Passage::new("a", words(499)),
            Passage::new("b", words(500)),
            Passage::new("c", words(1024)),
            Passage::new("d", words(1025)),
        ];
        let kept: Vec<_> = filter_by_length(&ps, 500, 1024).into_iter().map(|p| p.id).collect();
        assert_eq!(kept, ["b", "c"]);
    }
}
