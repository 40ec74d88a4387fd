//! How closely a passage's embedding tracks each third of its text.
//!
//! For every passage the full text and its beginning, middle and end thirds
//! are embedded separately, and the cosine between the full-text vector and
//! each segment vector is reported.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Passage;
use crate::dense::{cosine, DenseError};
use crate::providers::{EmbeddingKind, Embedder, ProviderError, TextItem};
use crate::text::word_spans;

#[derive(Debug, Error)]
pub enum DiagnoseError {
    #[error("passage {passage_id} has {words} words; at least 3 are needed")]
    TooShort { passage_id: String, words: usize },
    #[error("segment similarity needs single-vector embeddings")]
    NotDense,
    #[error("embedding failed for passages {passage_ids:?}: {source}")]
    Provider {
        passage_ids: Vec<String>,
        #[source]
        source: ProviderError,
    },
    #[error("passage {passage_id}: {source}")]
    Similarity {
        passage_id: String,
        #[source]
        source: DenseError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSimilarity {
    pub passage_id: String,
    pub sim_begin: f64,
    pub sim_middle: f64,
    pub sim_end: f64,
}

/// Per-passage similarities and their arithmetic means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub passages: usize,
    pub mean_begin: f64,
    pub mean_middle: f64,
    pub mean_end: f64,
    #[serde(skip)]
    pub rows: Vec<SegmentSimilarity>,
}

impl SimilarityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("passage_id,sim_begin,sim_middle,sim_end\n");
        for r in &self.rows {
            writeln!(out, "{},{:.6},{:.6},{:.6}", r.passage_id, r.sim_begin, r.sim_middle, r.sim_end).unwrap();
        }
        out
    }

    /// The means as pretty JSON.
    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Splits `text` into word thirds at `floor(z/3)` and `floor(2z/3)`.
///
/// Each part is the original text between its first and last word, so
/// whitespace inside a part is kept. Returns `None` for fewer than 3 words.
pub fn split_thirds(text: &str) -> Option<(&str, &str, &str)> {
    let spans = word_spans(text);
    let z = spans.len();
    if z < 3 {
        return None;
    }
    let (a, b) = (z / 3, 2 * z / 3);
    let part = |from: usize, to: usize| &text[spans[from].0..spans[to - 1].1];
    Some((part(0, a), part(a, b), part(b, z)))
}

/// Cosine between each passage's full-text embedding and the embeddings of
/// its three thirds.
///
/// Every text goes to the embedder in one call, so batching and concurrency
/// are the embedder's concern.
pub fn segment_similarity(passages: &[Passage], embedder: &dyn Embedder) -> Result<SimilarityReport, DiagnoseError> {
    if embedder.kind() != EmbeddingKind::Dense {
        return Err(DiagnoseError::NotDense);
    }
    let mut items = Vec::with_capacity(passages.len() * 4);
    for p in passages {
        let (b, m, e) = split_thirds(&p.text).ok_or_else(|| DiagnoseError::TooShort {
            passage_id: p.id.clone(),
            words: p.word_count,
        })?;
        for (suffix, text) in [("full", p.text.as_str()), ("begin", b), ("middle", m), ("end", e)] {
            items.push(TextItem::new(format!("{}#{suffix}", p.id), text));
        }
    }
    let records = embedder.embed(&items).map_err(|source| {
        let passage_ids = match &source {
            ProviderError::BatchFailed { failed_indices, .. } => {
                let mut ids: Vec<String> = failed_indices.iter().map(|&i| passages[i / 4].id.clone()).collect();
                ids.dedup();
                ids
            }
            _ => passages.iter().map(|p| p.id.clone()).collect(),
        };
        DiagnoseError::Provider { passage_ids, source }
    })?;

    let rows = passages
        .iter()
        .zip(records.chunks_exact(4))
        .map(|(p, r)| {
            let sim = |i: usize| {
                cosine(&r[0].data, &r[i].data).map_err(|source| DiagnoseError::Similarity {
                    passage_id: p.id.clone(),
                    source,
                })
            };
            Ok(SegmentSimilarity {
                passage_id: p.id.clone(),
                sim_begin: sim(1)?,
                sim_middle: sim(2)?,
                sim_end: sim(3)?,
            })
        })
        .collect::<Result<Vec<_>, DiagnoseError>>()?;

    let n = rows.len().max(1) as f64;
    let mean = |f: fn(&SegmentSimilarity) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Ok(SimilarityReport {
        passages: rows.len(),
        mean_begin: mean(|r| r.sim_begin),
        mean_middle: mean(|r| r.sim_middle),
        mean_end: mean(|r| r.sim_end),
        rows,
    })
}
