//! NDCG@k per position group and positional-degradation statistics.

mod report;
mod trec;

use std::collections::HashSet;
use std::path::Path;

use thiserror::Error;

pub use report::{
    consistency_check, degradation_stats, emit_report, evaluate_by_group, markdown_table,
    EvalReport, GroupScore, ReportFormat,
};
pub use trec::{Qrels, RankedHit, RunResult};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("query has no relevant passages")]
    NoRelevant,
    #[error("run contains query {0} which is not in the benchmark")]
    UnknownQuery(String),
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error("group labels differ: {0:?} vs {1:?}")]
    LabelMismatch(Vec<String>, Vec<String>),
    #[error("at least two groups are needed, got {0}")]
    TooFewGroups(usize),
    #[error("unknown report format {0:?}")]
    UnknownFormat(String),
    #[error("benchmark has no positional metadata for query {0}")]
    Ungrouped(String),
    #[error("{0}")]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl EvalError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        EvalError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub(crate) fn in_file(self, path: &Path) -> Self {
        EvalError::File {
            path: path.display().to_string(),
            message: self.to_string(),
        }
    }
}

fn discount(position: usize) -> f64 {
    // position is 0-based; rank r = position + 1 gets 1 / log2(r + 1)
    1.0 / ((position + 2) as f64).log2()
}

/// Binary-relevance NDCG@k.
///
/// Repeated passage ids in the ranking are counted once, at their first
/// position.
pub fn ndcg_at_k<S: AsRef<str>>(ranked: &[S], relevant: &[S], k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let relevant: HashSet<&str> = relevant.iter().map(AsRef::as_ref).collect();
    if relevant.is_empty() {
        return Err(EvalError::NoRelevant);
    }
    let mut seen: HashSet<&str> = HashSet::new();
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .map(AsRef::as_ref)
        .enumerate()
        .filter(|&(_, id)| relevant.contains(id) && seen.insert(id))
        .map(|(i, _)| discount(i))
        .fold(0.0, |acc, d| acc + d);
    let ideal: f64 = (0..relevant.len().min(k)).map(discount).sum();
    Ok(dcg / ideal)
}
