use anyhow::Result;
use myopic_core::corpus::{filter_by_length, read_passages_jsonl};
use myopic_core::diagnose::segment_similarity;
use myopic_core::{EmbeddingKind, Passage};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{build_embedder, read_bundle, require_file, write_output};
use crate::args::DiagnoseArgs;
use crate::config::Settings;

fn load_passages(args: &DiagnoseArgs) -> Result<Vec<Passage>> {
    if args.passages.is_dir() {
        return Ok(read_bundle(&args.passages)?.corpus);
    }
    require_file(&args.passages)?;
    Ok(read_passages_jsonl(&args.passages)?)
}

/// `n` passages drawn without replacement, kept in input order.
fn sample(passages: Vec<Passage>, n: usize, seed: u64) -> Vec<Passage> {
    if n >= passages.len() {
        return passages;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, passages.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| passages[i].clone()).collect()
}

pub fn diagnose(args: &DiagnoseArgs, settings: &Settings) -> Result<()> {
    let passages = load_passages(args)?;
    let min_words = settings.pick(args.min_words, settings.file.min_words, "MIN_WORDS")?.unwrap_or(0);
    let max_words = settings.pick(args.max_words, settings.file.max_words, "MAX_WORDS")?.unwrap_or(usize::MAX);
    let kept = filter_by_length(&passages, min_words, max_words);
    let kept = match args.sample_n {
        Some(n) => sample(kept, n, settings.seed(args.embedder.seed)?),
        None => kept,
    };
    tracing::info!(input = passages.len(), used = kept.len(), "diagnosing passages");

    let embedder = build_embedder(&args.embedder, settings, EmbeddingKind::Dense)?;
    let report = segment_similarity(&kept, embedder.as_ref())?;
    write_output(&args.out.join("similarity.csv"), report.to_csv())?;
    write_output(&args.out.join("summary.json"), report.summary_json())?;
    println!(
        "passages={} begin={:.4} middle={:.4} end={:.4}",
        report.passages, report.mean_begin, report.mean_middle, report.mean_end
    );
    super::embed::report_usage(embedder.as_ref());
    Ok(())
}
