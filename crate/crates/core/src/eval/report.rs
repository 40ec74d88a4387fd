use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ndcg_at_k, EvalError, RunResult};
use crate::corpus::{Benchmark, BinScheme, SegmentTag, DEFAULT_BIN_EDGES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub label: String,
    pub ndcg: f64,
    pub query_count: usize,
}

/// Mean NDCG@k per position group, ordered from earliest to latest position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub run_tag: String,
    pub k: usize,
    pub groups: Vec<GroupScore>,
    /// First-group NDCG minus last-group NDCG.
    pub head_tail_delta: f64,
    /// Spearman correlation between group position and NDCG.
    pub trend: f64,
    pub overall_ndcg: f64,
    pub query_count: usize,
    /// Benchmark queries absent from the run, scored as 0.
    pub missing_queries: usize,
}

impl EvalReport {
    pub fn labels(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.label.clone()).collect()
    }

    pub fn group(&self, label: &str) -> Option<&GroupScore> {
        self.groups.iter().find(|g| g.label == label)
    }
}

/// Ordered group labels and each query's memberships.
fn group_memberships(benchmark: &Benchmark) -> Result<(Vec<String>, HashMap<&str, Vec<usize>>), EvalError> {
    let mut members = HashMap::with_capacity(benchmark.queries.len());
    let offsets = benchmark.queries.first().is_some_and(|q| q.answer_start.is_some());
    if offsets {
        let scheme = match &benchmark.bin_scheme {
            Some(s) => s.clone(),
            None => {
                let max = benchmark.queries.iter().filter_map(|q| q.answer_start).max().unwrap_or(0);
                BinScheme::with_max_observed(&DEFAULT_BIN_EDGES, max, true)?
            }
        };
        for q in &benchmark.queries {
            let start = q.answer_start.ok_or_else(|| EvalError::Ungrouped(q.id.clone()))?;
            members.insert(q.id.as_str(), scheme.bins_for(start)?);
        }
        Ok((scheme.labels(), members))
    } else {
        for q in &benchmark.queries {
            let tags = q.segment_tags.as_ref().ok_or_else(|| EvalError::Ungrouped(q.id.clone()))?;
            let mut idx: Vec<usize> = tags
                .iter()
                .map(|t| SegmentTag::ALL.iter().position(|a| a == t).unwrap())
                .collect();
            idx.sort_unstable();
            idx.dedup();
            members.insert(q.id.as_str(), idx);
        }
        Ok((SegmentTag::ALL.iter().map(|t| t.to_string()).collect(), members))
    }
}

/// Mean NDCG@`k` per position group.
///
/// A query counts fully toward every group it belongs to. Benchmark queries
/// missing from the run score 0. Sums run in query-id order, so results do
/// not depend on query order in either input.
pub fn evaluate_by_group(run: &RunResult, benchmark: &Benchmark, k: usize) -> Result<EvalReport, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let (labels, members) = group_memberships(benchmark)?;
    if let Some(unknown) = run.rankings.keys().find(|q| !members.contains_key(q.as_str())) {
        return Err(EvalError::UnknownQuery(unknown.clone()));
    }

    let mut queries: Vec<_> = benchmark.queries.iter().collect();
    queries.sort_by(|a, b| a.id.cmp(&b.id));
    let scores: Vec<Option<f64>> = queries
        .par_iter()
        .map(|q| match run.ranked_ids(&q.id) {
            Some(ranked) => ndcg_at_k(&ranked, &q.relevant_passage_ids.iter().map(String::as_str).collect::<Vec<_>>(), k).map(Some),
            None => Ok(None),
        })
        .collect::<Result<_, _>>()?;

    let mut sums = vec![0.0f64; labels.len()];
    let mut counts = vec![0usize; labels.len()];
    let mut total = 0.0;
    let mut missing = 0;
    for (q, score) in queries.iter().zip(&scores) {
        let s = score.unwrap_or_else(|| {
            missing += 1;
            0.0
        });
        total += s;
        for &g in &members[q.id.as_str()] {
            sums[g] += s;
            counts[g] += 1;
        }
    }
    let groups: Vec<GroupScore> = labels
        .into_iter()
        .zip(sums.iter().zip(&counts))
        .map(|(label, (&sum, &n))| GroupScore {
            label,
            ndcg: if n == 0 { 0.0 } else { sum / n as f64 },
            query_count: n,
        })
        .collect();
    let populated: Vec<f64> = groups.iter().filter(|g| g.query_count > 0).map(|g| g.ndcg).collect();
    let (head_tail_delta, trend) = if populated.len() >= 2 {
        delta_and_trend(&populated)
    } else {
        (0.0, 0.0)
    };
    Ok(EvalReport {
        run_tag: run.tag.clone(),
        k,
        groups,
        head_tail_delta,
        trend,
        overall_ndcg: if queries.is_empty() { 0.0 } else { total / queries.len() as f64 },
        query_count: queries.len(),
        missing_queries: missing,
    })
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

fn spearman_with_position(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let x: Vec<f64> = (1..=values.len()).map(|i| i as f64).collect();
    let y = average_ranks(values);
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

fn delta_and_trend(values: &[f64]) -> (f64, f64) {
    (values[0] - values[values.len() - 1], spearman_with_position(values))
}

/// Head-minus-tail NDCG and rank trend over `ordered_groups`.
pub fn degradation_stats(report: &EvalReport, ordered_groups: &[String]) -> Result<(f64, f64), EvalError> {
    if ordered_groups.len() < 2 {
        return Err(EvalError::TooFewGroups(ordered_groups.len()));
    }
    let values = ordered_groups
        .iter()
        .map(|l| {
            report
                .group(l)
                .map(|g| g.ndcg)
                .ok_or_else(|| EvalError::LabelMismatch(ordered_groups.to_vec(), report.labels()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(delta_and_trend(&values))
}

/// Largest absolute per-group NDCG difference between two reports.
pub fn consistency_check(a: &EvalReport, b: &EvalReport) -> Result<f64, EvalError> {
    if a.labels() != b.labels() {
        return Err(EvalError::LabelMismatch(a.labels(), b.labels()));
    }
    Ok(a.groups
        .iter()
        .zip(&b.groups)
        .map(|(x, y)| (x.ndcg - y.ndcg).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
    PlotData,
}

impl FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "markdown" | "markdown-table" | "md" => Ok(Self::Markdown),
            "plot-data" => Ok(Self::PlotData),
            other => Err(EvalError::UnknownFormat(other.to_string())),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Json => "json",
            Self::Csv => "csv",
            Self::Markdown => "md",
            Self::PlotData => "plot.csv",
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

/// Markdown table with one row per report and NDCG×100 per group.
pub fn markdown_table(reports: &[EvalReport]) -> Result<String, EvalError> {
    let Some(first) = reports.first() else {
        return Ok(String::new());
    };
    let labels = first.labels();
    if let Some(r) = reports.iter().find(|r| r.labels() != labels) {
        return Err(EvalError::LabelMismatch(labels, r.labels()));
    }
    let mut out = String::new();
    writeln!(out, "| run | {} | head-tail | trend |", labels.join(" | ")).unwrap();
    writeln!(out, "|---|{}---:|---:|", "---:|".repeat(labels.len())).unwrap();
    for r in reports {
        let cells: Vec<String> = r.groups.iter().map(|g| pct(g.ndcg)).collect();
        writeln!(
            out,
            "| {} | {} | {} | {:.2} |",
            r.run_tag,
            cells.join(" | "),
            pct(r.head_tail_delta),
            r.trend
        )
        .unwrap();
    }
    Ok(out)
}

/// Serializes a report.
///
/// CSV columns are `group,label,ndcg10,n` where `group` is the 0-based
/// position of the group. Plot data carries NDCG×100 per group.
pub fn emit_report(report: &EvalReport, format: ReportFormat) -> Result<Vec<u8>, EvalError> {
    let out = match format {
        ReportFormat::Json => serde_json::to_string_pretty(report)? + "\n",
        ReportFormat::Csv => {
            let mut s = String::from("group,label,ndcg10,n\n");
            for (i, g) in report.groups.iter().enumerate() {
                writeln!(s, "{i},{},{:.6},{}", g.label, g.ndcg, g.query_count).unwrap();
            }
            s
        }
        ReportFormat::Markdown => markdown_table(std::slice::from_ref(report))?,
        ReportFormat::PlotData => {
            let mut s = String::from("position,label,ndcg10_pct,n,run\n");
            for (i, g) in report.groups.iter().enumerate() {
                writeln!(s, "{i},{},{},{},{}", g.label, pct(g.ndcg), g.query_count, report.run_tag).unwrap();
            }
            s
        }
    };
    Ok(out.into_bytes())
}
