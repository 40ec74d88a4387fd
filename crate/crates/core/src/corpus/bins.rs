use serde::{Deserialize, Serialize};

use super::{Benchmark, CorpusError};

/// Interior edges of the character-offset bins; the last edge is the maximum
/// observed offset.
pub const DEFAULT_BIN_EDGES: [usize; 6] = [0, 100, 200, 300, 400, 500];

/// Character-offset bins `[e0, e1], [e1, e2], ...`.
///
/// With `inclusive_boundaries` an offset equal to an interior edge belongs to
/// both neighbouring bins. Otherwise bins are half-open except the last,
/// which is closed so that the maximum offset is covered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinScheme {
    pub edges: Vec<usize>,
    pub inclusive_boundaries: bool,
}

impl BinScheme {
    pub fn new(edges: Vec<usize>, inclusive_boundaries: bool) -> Result<Self, CorpusError> {
        if edges.len() < 2 {
            return Err(CorpusError::InvalidBinScheme(
                "at least two edges are required".into(),
            ));
        }
        if let Some(w) = edges.windows(2).find(|w| w[0] >= w[1]) {
            return Err(CorpusError::InvalidBinScheme(format!(
                "edges must be strictly increasing ({} >= {})",
                w[0], w[1]
            )));
        }
        Ok(Self {
            edges,
            inclusive_boundaries,
        })
    }

    /// Default scheme closed at `max_observed`. The closing edge is bumped
    /// past the last interior edge when the data never reaches it.
    pub fn with_max_observed(
        interior: &[usize],
        max_observed: usize,
        inclusive_boundaries: bool,
    ) -> Result<Self, CorpusError> {
        let mut edges = interior.to_vec();
        let last = edges.last().copied().unwrap_or(0);
        edges.push(if max_observed > last || edges.is_empty() {
            max_observed
        } else {
            last + 1
        });
        Self::new(edges, inclusive_boundaries)
    }

    pub fn bin_count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn max(&self) -> usize {
        *self.edges.last().expect("validated scheme has edges")
    }

    /// Group labels such as `0+`, `100+`, ...
    pub fn labels(&self) -> Vec<String> {
        self.edges[..self.edges.len() - 1]
            .iter()
            .map(|e| format!("{e}+"))
            .collect()
    }

    /// Indices of the bins containing `offset`.
    pub fn bins_for(&self, offset: usize) -> Result<Vec<usize>, CorpusError> {
        let max = self.max();
        if offset > max {
            return Err(CorpusError::OffsetOutOfRange { offset, max });
        }
        let last = self.bin_count() - 1;
        let bins = (0..self.bin_count())
            .filter(|&i| {
                let (lo, hi) = (self.edges[i], self.edges[i + 1]);
                if self.inclusive_boundaries || i == last {
                    lo <= offset && offset <= hi
                } else {
                    lo <= offset && offset < hi
                }
            })
            .collect();
        Ok(bins)
    }
}

/// Labels of the bins an answer offset belongs to.
pub fn assign_bin(answer_start: usize, scheme: &BinScheme) -> Result<Vec<String>, CorpusError> {
    let labels = scheme.labels();
    Ok(scheme
        .bins_for(answer_start)?
        .into_iter()
        .map(|i| labels[i].clone())
        .collect())
}

/// Answer-start counts per `[k·width, (k+1)·width)` bucket, from 0 up to the
/// largest observed offset. Empty buckets are included.
pub fn histogram_answer_starts(
    benchmark: &Benchmark,
    bucket_width: usize,
) -> Result<Vec<(usize, usize)>, CorpusError> {
    if bucket_width == 0 {
        return Err(CorpusError::InvalidBinScheme("bucket width must be positive".into()));
    }
    let mut counts: Vec<usize> = Vec::new();
    for q in &benchmark.queries {
        let start = q
            .answer_start
            .ok_or_else(|| CorpusError::NotOffsetBenchmark(q.id.clone()))?;
        let bucket = start / bucket_width;
        if counts.len() <= bucket {
            counts.resize(bucket + 1, 0);
        }
        counts[bucket] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i * bucket_width, c))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Passage, PositionedQuery, SegmentTag};

    fn squad_scheme(inclusive: bool) -> BinScheme {
        BinScheme::with_max_observed(&DEFAULT_BIN_EDGES, 3120, inclusive).unwrap()
    }

    #[test]
    fn tagged_examples() {
        let s = squad_scheme(true);
        assert_eq!(s.labels(), ["0+", "100+", "200+", "300+", "400+", "500+"]);
        assert_eq!(assign_bin(0, &s).unwrap(), ["0+"]);
        assert_eq!(assign_bin(100, &s).unwrap(), ["0+", "100+"]);
        assert_eq!(assign_bin(3120, &s).unwrap(), ["500+"]);
        assert_eq!(assign_bin(500, &s).unwrap(), ["400+", "500+"]);
        assert!(matches!(
            assign_bin(3121, &s),
            Err(CorpusError::OffsetOutOfRange { offset: 3121, max: 3120 })
        ));
    }

    #[test]
    fn exclusive_bins_partition() {
        let s = squad_scheme(false);
        for offset in 0..=3120 {
            assert_eq!(s.bins_for(offset).unwrap().len(), 1, "offset {offset}");
        }
        assert_eq!(assign_bin(100, &s).unwrap(), ["100+"]);
        assert_eq!(assign_bin(3120, &s).unwrap(), ["500+"]);
    }

    #[test]
    fn scheme_validation() {
        assert!(BinScheme::new(vec![0, 100, 100], true).is_err());
        assert!(BinScheme::new(vec![0], true).is_err());
        // max below the last interior edge still yields a valid scheme
        let s = BinScheme::with_max_observed(&DEFAULT_BIN_EDGES, 42, true).unwrap();
        assert_eq!(s.max(), 501);
    }

    fn offsets_bench(offsets: &[usize]) -> Benchmark {
        Benchmark {
            name: "h".into(),
            corpus: vec![Passage::new("p", "x".repeat(4000))],
            queries: offsets
                .iter()
                .enumerate()
                .map(|(i, &o)| PositionedQuery {
                    id: format!("q{i}"),
                    text: "q".into(),
                    answer_start: Some(o),
                    segment_tags: None,
                    relevant_passage_ids: vec!["p".into()],
                })
                .collect(),
            bin_scheme: None,
        }
    }

    #[test]
    fn histogram_single_query() {
        assert_eq!(histogram_answer_starts(&offsets_bench(&[0]), 100).unwrap(), [(0, 1)]);
    }

    #[test]
    fn histogram_agrees_with_exclusive_bins() {
        let offsets: Vec<usize> = (0..700).map(|i| (i * 37) % 650).collect();
        let bench = offsets_bench(&offsets);
        let hist = histogram_answer_starts(&bench, 100).unwrap();
        assert_eq!(hist.iter().map(|h| h.1).sum::<usize>(), offsets.len());

        let scheme = BinScheme::with_max_observed(&DEFAULT_BIN_EDGES, 649, false).unwrap();
        let mut per_bin = vec![0usize; scheme.bin_count()];
        for &o in &offsets {
            for b in scheme.bins_for(o).unwrap() {
                per_bin[b] += 1;
            }
        }
        // the first five width-100 buckets line up with the first five bins
        for i in 0..5 {
            assert_eq!(hist[i].1, per_bin[i]);
        }
        assert_eq!(hist[5..].iter().map(|h| h.1).sum::<usize>(), per_bin[5]);
    }

    #[test]
    fn histogram_rejects_tag_benchmarks() {
        let mut bench = offsets_bench(&[1]);
        bench.queries[0].answer_start = None;
        bench.queries[0].segment_tags = Some(vec![SegmentTag::End]);
        assert!(matches!(
            histogram_answer_starts(&bench, 100),
            Err(CorpusError::NotOffsetBenchmark(_))
        ));
    }
}
