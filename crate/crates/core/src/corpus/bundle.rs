//! On-disk benchmark bundle: `corpus.jsonl`, `queries.jsonl`, `qrels.txt`
//! and (for offset-binned benchmarks) `bins.json`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{BinScheme, Benchmark, CorpusError, Passage, PositionedQuery};
use crate::eval::Qrels;

pub const BUNDLE_CORPUS: &str = "corpus.jsonl";
pub const BUNDLE_QUERIES: &str = "queries.jsonl";
pub const BUNDLE_QRELS: &str = "qrels.txt";
pub const BUNDLE_BINS: &str = "bins.json";

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n").map_err(|e| CorpusError::io(path, e))?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))
}

pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| CorpusError::Format {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a generic passage file: one `{"id": ..., "text": ...}` per line.
pub fn read_passages_jsonl(path: &Path) -> Result<Vec<Passage>, CorpusError> {
    let passages: Vec<Passage> = read_jsonl(path)?;
    if let Some(p) = passages.iter().find(|p| p.text.is_empty()) {
        return Err(CorpusError::Invalid(format!("passage {} has empty text", p.id)));
    }
    Ok(passages)
}

/// Writes the bundle files into `dir`, creating it if needed.
pub fn write_bundle(dir: &Path, benchmark: &Benchmark) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
    write_jsonl(&dir.join(BUNDLE_CORPUS), &benchmark.corpus)?;
    write_jsonl(&dir.join(BUNDLE_QUERIES), &benchmark.queries)?;

    let qrels_path = dir.join(BUNDLE_QRELS);
    Qrels::from_benchmark(benchmark)
        .write(&qrels_path)
        .map_err(|e| CorpusError::Invalid(e.to_string()))?;

    let bins_path = dir.join(BUNDLE_BINS);
    match &benchmark.bin_scheme {
        Some(scheme) => {
            let json = serde_json::to_string_pretty(scheme)?;
            fs::write(&bins_path, json + "\n").map_err(|e| CorpusError::io(&bins_path, e))?;
        }
        None if bins_path.exists() => {
            fs::remove_file(&bins_path).map_err(|e| CorpusError::io(&bins_path, e))?;
        }
        None => {}
    }
    Ok(())
}

/// Reads a bundle written by [`write_bundle`] and validates it.
///
/// The benchmark is named after the directory.
/// `qrels.txt` must agree with the queries' relevance links.
pub fn read_bundle(dir: &Path) -> Result<Benchmark, CorpusError> {
    let corpus: Vec<Passage> = read_jsonl(&dir.join(BUNDLE_CORPUS))?;
    let queries: Vec<PositionedQuery> = read_jsonl(&dir.join(BUNDLE_QUERIES))?;
    let bins_path = dir.join(BUNDLE_BINS);
    let bin_scheme = if bins_path.exists() {
        let raw = fs::read(&bins_path).map_err(|e| CorpusError::io(&bins_path, e))?;
        let scheme: BinScheme = serde_json::from_slice(&raw)?;
        Some(BinScheme::new(scheme.edges, scheme.inclusive_boundaries)?)
    } else {
        None
    };
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let benchmark = Benchmark {
        name,
        corpus,
        queries,
        bin_scheme,
    };
    benchmark.validate()?;

    let qrels_path = dir.join(BUNDLE_QRELS);
    if qrels_path.exists() {
        let on_disk =
            Qrels::read(&qrels_path).map_err(|e| CorpusError::Invalid(e.to_string()))?;
        if on_disk != Qrels::from_benchmark(&benchmark) {
            return Err(CorpusError::Invalid(format!(
                "{} disagrees with {}",
                qrels_path.display(),
                BUNDLE_QUERIES
            )));
        }
    }
    Ok(benchmark)
}
