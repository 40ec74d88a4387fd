use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use myopic_core::corpus::{
    dedupe_passages, filter_by_length, histogram_answer_starts, parse_squad, read_passages_jsonl, sample_tiny,
    write_bundle, DEFAULT_BIN_EDGES,
};
use myopic_core::posgen::{build_fineweb_benchmark, sample_by_tag, AuditLog, PosgenConfig, StubChat};
use myopic_core::providers::{HttpChat, HttpTransport};
use myopic_core::{Benchmark, BinScheme, ChatModel, SegmentTag};
use serde::Serialize;

use super::{read_bundle, require_file, write_output};
use crate::args::{BuildFinewebArgs, BuildSquadArgs, SampleArgs};
use crate::config::Settings;
use crate::exit::{InputError, PartialFailure};

#[derive(Debug, Serialize)]
struct BinCount {
    label: String,
    low: usize,
    high: usize,
    queries: usize,
}

#[derive(Debug, Serialize)]
struct SquadStats {
    queries: usize,
    passages: usize,
    unanswerable_removed: usize,
    skipped: usize,
    min_passage_words: usize,
    max_passage_words: usize,
    mean_passage_words: f64,
    bins: Vec<BinCount>,
}

fn passage_lengths(bench: &Benchmark) -> (usize, usize, f64) {
    let lengths: Vec<usize> = bench.corpus.iter().map(|p| p.word_count).collect();
    let min = lengths.iter().copied().min().unwrap_or(0);
    let max = lengths.iter().copied().max().unwrap_or(0);
    let mean = if lengths.is_empty() {
        0.0
    } else {
        lengths.iter().sum::<usize>() as f64 / lengths.len() as f64
    };
    (min, max, mean)
}

fn bin_counts(bench: &Benchmark, scheme: &BinScheme) -> Result<Vec<BinCount>> {
    let mut counts = vec![0; scheme.bin_count()];
    for q in &bench.queries {
        for b in scheme.bins_for(q.answer_start.unwrap_or_default())? {
            counts[b] += 1;
        }
    }
    Ok(scheme
        .labels()
        .into_iter()
        .zip(counts)
        .enumerate()
        .map(|(i, (label, queries))| BinCount {
            label,
            low: scheme.edges[i],
            high: scheme.edges[i + 1],
            queries,
        })
        .collect())
}

pub fn build_squad(args: &BuildSquadArgs, settings: &Settings) -> Result<()> {
    let mut triples = Vec::new();
    let (mut unanswerable, mut skipped) = (0, 0);
    for path in &args.inputs {
        require_file(path)?;
        let raw = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let parsed = parse_squad(&raw).with_context(|| format!("parsing {}", path.display()))?;
        for (at, reason) in &parsed.skipped {
            tracing::warn!(file = %path.display(), at, reason, "skipped question");
        }
        tracing::info!(file = %path.display(), answerable = parsed.triples.len(), "parsed");
        unanswerable += parsed.unanswerable;
        skipped += parsed.skipped.len();
        triples.extend(parsed.triples);
    }
    let mut bench = dedupe_passages("squad-posq", &triples);

    let edges = settings
        .pick(args.bins.clone().map(Edges), settings.file.bins.clone().map(Edges), "BINS")?
        .map_or(DEFAULT_BIN_EDGES.to_vec(), |e| e.0);
    let inclusive = settings.pick(args.inclusive_bins, settings.file.inclusive_bins, "INCLUSIVE_BINS")?.unwrap_or(true);
    let max = bench.queries.iter().filter_map(|q| q.answer_start).max().unwrap_or(0);
    let scheme = BinScheme::with_max_observed(&edges, max, inclusive)?;
    bench.bin_scheme = Some(scheme.clone());
    bench.validate()?;
    write_bundle(&args.out, &bench)?;

    let (min_words, max_words, mean_words) = passage_lengths(&bench);
    let stats = SquadStats {
        queries: bench.queries.len(),
        passages: bench.corpus.len(),
        unanswerable_removed: unanswerable,
        skipped,
        min_passage_words: min_words,
        max_passage_words: max_words,
        mean_passage_words: mean_words,
        bins: bin_counts(&bench, &scheme)?,
    };
    write_output(&args.out.join("stats.json"), serde_json::to_string_pretty(&stats)? + "\n")?;
    println!("queries={} passages={}", stats.queries, stats.passages);
    println!(
        "passage words: min={} max={} mean={:.1}",
        stats.min_passage_words, stats.max_passage_words, stats.mean_passage_words
    );
    for b in &stats.bins {
        println!("bin {:>5} [{}-{}]: {}", b.label, b.low, b.high, b.queries);
    }

    if let Some(width) = args.histogram_width {
        for (start, count) in histogram_answer_starts(&bench, width)? {
            println!("offset {start:>5}: {count}");
        }
    }

    if let Some(n) = args.tiny_n {
        let seed = settings.seed(args.seed)?;
        let tiny = sample_tiny(&bench, n, seed)?;
        write_bundle(&args.out.join("tiny"), &tiny)?;
        println!("tiny queries={} passages={} seed={seed}", tiny.queries.len(), tiny.corpus.len());
        for b in bin_counts(&tiny, &scheme)? {
            println!("tiny bin {:>5}: {}", b.label, b.queries);
        }
    }
    Ok(())
}

/// Comma-separated bin edges, as read from the environment.
#[derive(Debug, Clone)]
struct Edges(Vec<usize>);

impl std::str::FromStr for Edges {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>().map(Edges)
    }
}

#[derive(Debug, Serialize)]
struct FinewebStats {
    input_passages: usize,
    kept_passages: usize,
    queries: usize,
    filtered_responses: usize,
    summaries_over_limit: usize,
    failures: Vec<myopic_core::posgen::PassageFailure>,
    tag_counts: Vec<TagCount>,
}

#[derive(Debug, Serialize)]
struct TagCount {
    tag: SegmentTag,
    queries: usize,
}

#[derive(Serialize)]
struct GeneratedLine<'a> {
    query_id: &'a str,
    #[serde(flatten)]
    qa: &'a myopic_core::GeneratedQA,
}

fn tag_counts(bench: &Benchmark) -> Vec<TagCount> {
    SegmentTag::ALL
        .iter()
        .map(|&t| {
            let n = bench
                .queries
                .iter()
                .filter(|q| q.segment_tags.as_ref().is_some_and(|s| s.contains(&t)))
                .count();
            TagCount { tag: t, queries: n }
        })
        .collect()
}

pub fn build_fineweb(args: &BuildFinewebArgs, settings: &Settings) -> Result<()> {
    require_file(&args.input)?;
    let passages = read_passages_jsonl(&args.input)?;
    let min_words = settings.pick(args.min_words, settings.file.min_words, "MIN_WORDS")?.unwrap_or(500);
    let max_words = settings.pick(args.max_words, settings.file.max_words, "MAX_WORDS")?.unwrap_or(1024);
    if min_words > max_words {
        return Err(InputError::new(format!("--min-words {min_words} exceeds --max-words {max_words}")).into());
    }
    let kept = filter_by_length(&passages, min_words, max_words);
    tracing::info!(input = passages.len(), kept = kept.len(), min_words, max_words, "length filter");

    let mut config = PosgenConfig {
        chunk_size: settings.pick(args.chunk_size, settings.file.chunk_size, "CHUNK_SIZE")?.unwrap_or(256),
        cache_dir: Some(settings.cache_dir(args.cache_dir.clone())?.unwrap_or_else(|| args.out.join("cache"))),
        ..Default::default()
    };
    if config.chunk_size == 0 {
        return Err(InputError::new("--chunk-size must be at least 1").into());
    }
    let llm: Box<dyn ChatModel> = if args.stub {
        Box::new(StubChat::default())
    } else {
        let provider = settings.provider("chat")?;
        config.retry = provider.retry_policy();
        config.max_concurrency = provider.max_concurrency;
        let transport = Arc::new(HttpTransport::new(&provider)?);
        Box::new(HttpChat::new(provider, transport)?)
    };

    let audit = AuditLog::new();
    let build = build_fineweb_benchmark("fineweb-posq", &kept, llm.as_ref(), &config, &audit)?;
    write_bundle(&args.out, &build.benchmark)?;
    audit.write_jsonl(&args.out.join("audit.jsonl"))?;
    let mut generated = String::new();
    for (q, qa) in build.benchmark.queries.iter().zip(&build.generated) {
        generated.push_str(&serde_json::to_string(&GeneratedLine { query_id: &q.id, qa })?);
        generated.push('\n');
    }
    write_output(&args.out.join("generated.jsonl"), generated)?;

    let stats = FinewebStats {
        input_passages: passages.len(),
        kept_passages: kept.len(),
        queries: build.benchmark.queries.len(),
        filtered_responses: build.filtered_responses,
        summaries_over_limit: build.summaries_over_limit,
        failures: build.failures.clone(),
        tag_counts: tag_counts(&build.benchmark),
    };
    write_output(&args.out.join("stats.json"), serde_json::to_string_pretty(&stats)? + "\n")?;
    println!(
        "queries={} passages={} filtered_responses={} failures={}",
        stats.queries,
        build.benchmark.corpus.len(),
        stats.filtered_responses,
        stats.failures.len()
    );
    for c in &stats.tag_counts {
        println!("tag {}: {}", c.tag, c.queries);
    }

    if let Some(per_tag) = args.per_tag {
        let seed = settings.seed(args.seed)?;
        write_tag_sample(&build.benchmark, per_tag, seed, &args.out.join("tiny"))?;
    }
    if !build.failures.is_empty() {
        for f in &build.failures {
            tracing::error!(passage = %f.passage_id, chunk = ?f.chunk, "{}", f.message);
        }
        return Err(PartialFailure(format!(
            "{} generation steps failed; rerun to retry them from the response cache",
            build.failures.len()
        ))
        .into());
    }
    Ok(())
}

fn write_tag_sample(bench: &Benchmark, per_tag: usize, seed: u64, out: &Path) -> Result<()> {
    let tiny = sample_by_tag(bench, per_tag, seed).map_err(|e| InputError::new(e.to_string()))?;
    write_bundle(out, &tiny)?;
    println!(
        "tiny queries={} (drawn {per_tag} per tag, unique after dedup) seed={seed}",
        tiny.queries.len()
    );
    for c in tag_counts(&tiny) {
        println!("tiny tag {}: {}", c.tag, c.queries);
    }
    Ok(())
}

pub fn sample(args: &SampleArgs, settings: &Settings) -> Result<()> {
    let bench = read_bundle(&args.bundle)?;
    let seed = settings.seed(args.seed)?;
    match (args.tiny_n, args.per_tag) {
        (Some(n), _) => {
            let tiny = sample_tiny(&bench, n, seed)?;
            write_bundle(&args.out, &tiny)?;
            println!("queries={} passages={} seed={seed}", tiny.queries.len(), tiny.corpus.len());
        }
        (None, Some(per_tag)) => write_tag_sample(&bench, per_tag, seed, &args.out)?,
        (None, None) => unreachable!("clap requires one of --tiny-n and --per-tag"),
    }
    Ok(())
}
