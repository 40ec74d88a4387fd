//! TREC run and qrels text formats.
//!
//! Run lines: `<qid> Q0 <pid> <rank> <score> <tag>` with ranks from 1 and
//! scores printed in the shortest decimal form that parses back to the same
//! `f64`. Qrels lines: `<qid> 0 <pid> <rel>`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::EvalError;
use crate::corpus::Benchmark;

#[derive(Debug, Clone, PartialEq)]
pub struct RankedHit {
    pub passage_id: String,
    pub rank: usize,
    pub score: f64,
}

/// Ranked passages per query.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunResult {
    pub tag: String,
    pub rankings: BTreeMap<String, Vec<RankedHit>>,
}

impl RunResult {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            rankings: BTreeMap::new(),
        }
    }

    /// Adds a query's ranking, given best first; ranks are assigned from 1.
    pub fn insert(&mut self, query_id: impl Into<String>, ranked: impl IntoIterator<Item = (String, f64)>) {
        let hits = ranked
            .into_iter()
            .enumerate()
            .map(|(i, (passage_id, score))| RankedHit {
                passage_id,
                rank: i + 1,
                score,
            })
            .collect();
        self.rankings.insert(query_id.into(), hits);
    }

    pub fn ranked_ids(&self, query_id: &str) -> Option<Vec<&str>> {
        self.rankings
            .get(query_id)
            .map(|hits| hits.iter().map(|h| h.passage_id.as_str()).collect())
    }

    pub fn query_count(&self) -> usize {
        self.rankings.len()
    }

    /// Ranks must be `1..=n` and scores non-increasing.
    pub fn validate(&self) -> Result<(), EvalError> {
        for (qid, hits) in &self.rankings {
            for (i, h) in hits.iter().enumerate() {
                if h.rank != i + 1 {
                    return Err(EvalError::InvalidRun(format!("{qid}: rank {} at position {}", h.rank, i + 1)));
                }
            }
            if let Some(w) = hits.windows(2).find(|w| w[1].score > w[0].score) {
                return Err(EvalError::InvalidRun(format!(
                    "{qid}: score rises from {} to {} at rank {}",
                    w[0].score, w[1].score, w[1].rank
                )));
            }
        }
        Ok(())
    }

    pub fn to_trec_string(&self) -> String {
        let tag = if self.tag.is_empty() { "run" } else { self.tag.as_str() };
        let mut out = String::new();
        for (qid, hits) in &self.rankings {
            for h in hits {
                writeln!(out, "{qid} Q0 {} {} {} {tag}", h.passage_id, h.rank, h.score).unwrap();
            }
        }
        out
    }

    pub fn parse_trec(text: &str) -> Result<Self, EvalError> {
        let mut run = RunResult::default();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: &str| EvalError::Parse {
                line: n + 1,
                message: m.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [qid, _q0, pid, rank, score, tag] = fields[..] else {
                return Err(bad("expected 6 fields"));
            };
            let rank: usize = rank.parse().map_err(|_| bad("rank is not an integer"))?;
            let score: f64 = score.parse().map_err(|_| bad("score is not a number"))?;
            if run.tag.is_empty() {
                run.tag = tag.to_string();
            }
            run.rankings.entry(qid.to_string()).or_default().push(RankedHit {
                passage_id: pid.to_string(),
                rank,
                score,
            });
        }
        for hits in run.rankings.values_mut() {
            hits.sort_by_key(|h| h.rank);
        }
        run.validate()?;
        Ok(run)
    }

    pub fn write(&self, path: &Path) -> Result<(), EvalError> {
        fs::write(path, self.to_trec_string()).map_err(|e| EvalError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, EvalError> {
        let text = fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
        Self::parse_trec(&text).map_err(|e| e.in_file(path))
    }
}

/// Relevance judgements: query id → passage id → grade.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Qrels {
    pub judgements: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn from_benchmark(benchmark: &Benchmark) -> Self {
        let mut judgements: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();
        for q in &benchmark.queries {
            let entry = judgements.entry(q.id.clone()).or_default();
            for pid in &q.relevant_passage_ids {
                entry.insert(pid.clone(), 1);
            }
        }
        Self { judgements }
    }

    /// Passage ids with a positive grade.
    pub fn relevant(&self, query_id: &str) -> Vec<&str> {
        self.judgements
            .get(query_id)
            .map(|m| m.iter().filter(|(_, &g)| g > 0).map(|(p, _)| p.as_str()).collect())
            .unwrap_or_default()
    }

    pub fn to_trec_string(&self) -> String {
        let mut out = String::new();
        for (qid, docs) in &self.judgements {
            for (pid, grade) in docs {
                writeln!(out, "{qid} 0 {pid} {grade}").unwrap();
            }
        }
        out
    }

    pub fn parse_trec(text: &str) -> Result<Self, EvalError> {
        let mut judgements: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: &str| EvalError::Parse {
                line: n + 1,
                message: m.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [qid, _iter, pid, grade] = fields[..] else {
                return Err(bad("expected 4 fields"));
            };
            let grade: u32 = grade.parse().map_err(|_| bad("relevance is not a non-negative integer"))?;
            judgements.entry(qid.to_string()).or_default().insert(pid.to_string(), grade);
        }
        Ok(Self { judgements })
    }

    pub fn write(&self, path: &Path) -> Result<(), EvalError> {
        fs::write(path, self.to_trec_string()).map_err(|e| EvalError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, EvalError> {
        let text = fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
        Self::parse_trec(&text).map_err(|e| e.in_file(path))
    }
}
