//! Seeded synthetic benchmarks with evidence planted at known positions.
//!
//! [`segment_benchmark`] produces random-word passages whose queries quote a
//! span from the beginning, middle or end third. [`twin_benchmark`] produces
//! groups of passages sharing one bag of words, each with the same evidence
//! sentence moved to a different character-offset bin.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Benchmark, BinScheme, CorpusError, Passage, PositionedQuery, DEFAULT_BIN_EDGES};
use crate::posgen::{position_tags, ChunkSpan};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentBenchConfig {
    pub passages: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub query_words: usize,
    pub vocabulary: usize,
    pub seed: u64,
}

impl Default for SegmentBenchConfig {
    fn default() -> Self {
        Self {
            passages: 500,
            min_words: 90,
            max_words: 150,
            query_words: 12,
            vocabulary: 20_000,
            seed: 0,
        }
    }
}

fn word(rng: &mut ChaCha8Rng, vocabulary: usize) -> String {
    format!("w{:05}", rng.gen_range(0..vocabulary))
}

/// Random-word passages with three queries each, one quoting a span that
/// lies wholly inside each third of the passage.
pub fn segment_benchmark(config: &SegmentBenchConfig) -> Result<Benchmark, CorpusError> {
    if config.query_words == 0 || config.min_words < 3 * config.query_words || config.min_words > config.max_words {
        return Err(CorpusError::Invalid(format!(
            "need 0 < 3 × query_words ({}) ≤ min_words ({}) ≤ max_words ({})",
            config.query_words, config.min_words, config.max_words
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut corpus = Vec::with_capacity(config.passages);
    let mut queries = Vec::with_capacity(config.passages * 3);
    for p in 0..config.passages {
        let len = rng.gen_range(config.min_words..=config.max_words);
        let words: Vec<String> = (0..len).map(|_| word(&mut rng, config.vocabulary)).collect();
        let id = format!("s{p:05}");
        let third = len / 3;
        let bounds = [(0, third), (third, 2 * third), (2 * third, len)];
        for (seg, (lo, hi)) in bounds.into_iter().enumerate() {
            let start = rng.gen_range(lo..=hi - config.query_words);
            let span = ChunkSpan::new(len, start, start + config.query_words - 1).expect("span inside passage");
            let tags = position_tags(&span).expect("passages have at least 3 words");
            queries.push(PositionedQuery {
                id: format!("{id}-{seg}"),
                text: words[start..start + config.query_words].join(" "),
                answer_start: None,
                segment_tags: Some(tags),
                relevant_passage_ids: vec![id.clone()],
            });
        }
        corpus.push(Passage::new(id, words.join(" ")));
    }
    Ok(Benchmark {
        name: format!("synthetic-segments-{}", config.seed),
        corpus,
        queries,
        bin_scheme: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwinBenchConfig {
    pub bases: usize,
    /// Upper bound on query words taken from an unrelated passage.
    pub max_distractor_words: usize,
    pub seed: u64,
}

impl Default for TwinBenchConfig {
    fn default() -> Self {
        Self {
            bases: 100,
            max_distractor_words: 8,
            seed: 0,
        }
    }
}

const FILLERS: usize = 18;
const SENTENCE_WORDS: usize = 5;

/// Twins of each base passage place the evidence sentence in successive
/// default offset bins.
///
/// All twins of a base contain the same words and have the same length,
/// apart from one marker token of fixed width. A query consists of the
/// evidence sentence, its twin's marker and some words from another base.
/// Sentences are 5 words of 5 characters, so each sentence plus separator
/// occupies 31 characters.
pub fn twin_benchmark(config: &TwinBenchConfig) -> Result<Benchmark, CorpusError> {
    if config.bases < 2 {
        return Err(CorpusError::Invalid("at least two base passages are needed".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sentence = |rng: &mut ChaCha8Rng| -> String {
        let words: Vec<String> = (0..SENTENCE_WORDS).map(|_| format!("w{:04}", rng.gen_range(0..10_000))).collect();
        words.join(" ") + "."
    };
    let bases: Vec<(Vec<String>, String)> = (0..config.bases)
        .map(|_| ((0..FILLERS).map(|_| sentence(&mut rng)).collect(), sentence(&mut rng)))
        .collect();
    let bins = DEFAULT_BIN_EDGES.len();
    // fillers preceding the evidence so that it starts inside bin k
    let before: Vec<usize> = (0..bins).map(|k| (100 * k).div_ceil(31) + usize::from(k > 0 && (100 * k) % 31 == 0)).collect();

    let mut corpus = Vec::new();
    let mut queries = Vec::new();
    let mut max_offset = 0;
    for (b, (fillers, evidence)) in bases.iter().enumerate() {
        let other = (b + rng.gen_range(1..config.bases)) % config.bases;
        let mut distractor: Vec<&str> = bases[other].0.iter().flat_map(|s| s.trim_end_matches('.').split(' ')).collect();
        distractor.shuffle(&mut rng);
        distractor.truncate(rng.gen_range(0..=config.max_distractor_words));
        for (k, &j) in before.iter().enumerate() {
            let id = format!("b{b:04}-t{k}");
            let marker = format!("m{b:04}{k}");
            let mut parts: Vec<&str> = fillers[..j].iter().map(String::as_str).collect();
            let offset = parts.iter().map(|s| s.len() + 1).sum::<usize>();
            parts.push(evidence);
            parts.extend(fillers[j..].iter().map(String::as_str));
            parts.push(&marker);
            max_offset = max_offset.max(offset);
            let mut q = vec![evidence.trim_end_matches('.'), marker.as_str()];
            q.extend(&distractor);
            queries.push(PositionedQuery {
                id: format!("q{b:04}-{k}"),
                text: q.join(" "),
                answer_start: Some(offset),
                segment_tags: None,
                relevant_passage_ids: vec![id.clone()],
            });
            corpus.push(Passage::new(id, parts.join(" ")));
        }
    }
    let bench = Benchmark {
        name: format!("synthetic-twins-{}", config.seed),
        corpus,
        queries,
        bin_scheme: Some(BinScheme::with_max_observed(&DEFAULT_BIN_EDGES, max_offset, true)?),
    };
    bench.validate()?;
    Ok(bench)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SegmentTag;

    #[test]
    fn segment_queries_quote_their_third() {
        let cfg = SegmentBenchConfig {
            passages: 40,
            ..Default::default()
        };
        let bench = segment_benchmark(&cfg).unwrap();
        bench.validate().unwrap();
        assert_eq!(bench.queries.len(), 120);
        for (i, q) in bench.queries.iter().enumerate() {
            assert_eq!(q.segment_tags.as_deref(), Some(&[SegmentTag::ALL[i % 3]][..]));
            let passage = bench.passage(&q.relevant_passage_ids[0]).unwrap();
            assert!(passage.text.contains(&q.text));
        }
        assert_eq!(segment_benchmark(&cfg).unwrap(), bench);
    }

    #[test]
    fn bad_segment_config() {
        let cfg = SegmentBenchConfig {
            min_words: 20,
            ..Default::default()
        };
        assert!(segment_benchmark(&cfg).is_err());
    }

    #[test]
    fn twins_land_in_successive_bins() {
        let bench = twin_benchmark(&TwinBenchConfig {
            bases: 5,
            ..Default::default()
        })
        .unwrap();
        let scheme = bench.bin_scheme.clone().unwrap();
        for q in &bench.queries {
            let k: usize = q.id.rsplit('-').next().unwrap().parse().unwrap();
            assert_eq!(scheme.bins_for(q.answer_start.unwrap()).unwrap(), [k], "{}", q.id);
            let p = bench.passage(&q.relevant_passage_ids[0]).unwrap();
            let start = q.answer_start.unwrap();
            let first_query_word = q.text.split(' ').next().unwrap();
            assert_eq!(&p.text[start..start + first_query_word.len()], first_query_word);
        }
        let twins: Vec<&Passage> = bench.corpus.iter().filter(|p| p.id.starts_with("b0002-")).collect();
        assert_eq!(twins.len(), 6);
        fn bag(p: &Passage) -> Vec<&str> {
            let mut w: Vec<&str> = p.text.split_whitespace().filter(|w| !w.starts_with('m')).collect();
            w.sort();
            w
        }
        assert!(twins.iter().all(|t| bag(t) == bag(twins[0]) && t.text.len() == twins[0].text.len()));
    }
}
