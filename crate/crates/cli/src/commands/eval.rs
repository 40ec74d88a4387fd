use std::path::Path;

use anyhow::{Context, Result};
use myopic_core::eval::{consistency_check, emit_report, evaluate_by_group, ReportFormat};
use myopic_core::{EvalReport, RunResult};

use super::{read_bundle, require_file, write_output};
use crate::args::EvalArgs;
use crate::config::Settings;
use crate::exit::{InputError, ThresholdExceeded};

pub const DEFAULT_EVAL_K: usize = 10;

pub fn read_report(path: &Path) -> Result<EvalReport> {
    require_file(path)?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(|e| InputError::new(format!("{} is not a JSON report: {e}", path.display())).into())
}

fn parse_formats(names: &[String], default: &[ReportFormat]) -> Result<Vec<ReportFormat>> {
    if names.is_empty() {
        return Ok(default.to_vec());
    }
    names
        .iter()
        .map(|n| n.parse().map_err(|e| InputError::new(format!("--format {n}: {e}")).into()))
        .collect()
}

fn compare(paths: &[std::path::PathBuf]) -> Result<()> {
    let (a, b) = (read_report(&paths[0])?, read_report(&paths[1])?);
    let gap = consistency_check(&a, &b)?;
    for (x, y) in a.groups.iter().zip(&b.groups) {
        println!("{:>8}: {:.4} vs {:.4} (gap {:.4})", x.label, x.ndcg, y.ndcg, (x.ndcg - y.ndcg).abs());
    }
    println!("max_gap={gap:.6}");
    Ok(())
}

pub fn eval(args: &EvalArgs, settings: &Settings) -> Result<()> {
    if let Some(paths) = &args.compare {
        return compare(paths);
    }
    let (bundle, run_path) = (args.bundle.as_ref().unwrap(), args.run.as_ref().unwrap());
    let bench = read_bundle(bundle)?;
    require_file(run_path)?;
    let run = RunResult::read(run_path)?;
    let k = settings.k(args.k, DEFAULT_EVAL_K)?;
    let report = evaluate_by_group(&run, &bench, k)?;
    if report.missing_queries > 0 {
        tracing::warn!(missing = report.missing_queries, "queries absent from the run were scored as 0");
    }

    match &args.out {
        Some(dir) => {
            let formats = parse_formats(
                &args.formats,
                &[ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown, ReportFormat::PlotData],
            )?;
            let stem = run_path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
            for f in formats {
                write_output(&dir.join(format!("{stem}.{}", f.extension())), emit_report(&report, f)?)?;
            }
            println!(
                "groups={} head_tail_delta={:.4} trend={:.3} ndcg={:.4}",
                report.groups.len(),
                report.head_tail_delta,
                report.trend,
                report.overall_ndcg
            );
        }
        None => {
            let formats = parse_formats(&args.formats, &[ReportFormat::Markdown])?;
            print!("{}", String::from_utf8(emit_report(&report, formats[0])?)?);
        }
    }

    if let Some(limit) = args.fail_if_delta_above {
        if report.head_tail_delta > limit {
            return Err(ThresholdExceeded {
                delta: report.head_tail_delta,
                limit,
            }
            .into());
        }
    }
    Ok(())
}
