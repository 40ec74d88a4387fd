//! JSONL embedding files: one `{"id": ..., "vectors": [[...], ...]}` per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmbeddingKind, EmbeddingRecord, ProviderError};

#[derive(Serialize, Deserialize)]
struct Line {
    id: String,
    vectors: Vec<Vec<f32>>,
}

fn io_err(path: &Path, e: impl ToString) -> ProviderError {
    ProviderError::Cache {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn read_embeddings_jsonl(path: &Path, kind: EmbeddingKind) -> Result<Vec<EmbeddingRecord>, ProviderError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut out: Vec<EmbeddingRecord> = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|e| io_err(path, format!("line {}: {e}", n + 1)))?;
        let record = EmbeddingRecord::from_rows(parsed.id, kind, &parsed.vectors)
            .map_err(|e| io_err(path, format!("line {}: {e}", n + 1)))?;
        if let Some(first) = out.first() {
            if first.dim != record.dim {
                return Err(ProviderError::DimensionMismatch {
                    index: out.len(),
                    expected: first.dim,
                    found: record.dim,
                });
            }
        }
        out.push(record);
    }
    Ok(out)
}

pub fn write_embeddings_jsonl(path: &Path, records: &[EmbeddingRecord]) -> Result<(), ProviderError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = Line {
            id: r.item_id.clone(),
            vectors: r.iter_rows().map(<[f32]>::to_vec).collect(),
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| io_err(path, e))?;
        w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        let recs = vec![
            EmbeddingRecord::from_rows("a", EmbeddingKind::Multivector, &[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap(),
            EmbeddingRecord::from_rows("b", EmbeddingKind::Multivector, &[vec![1.0, 0.0]]).unwrap(),
        ];
        write_embeddings_jsonl(&path, &recs).unwrap();
        assert_eq!(read_embeddings_jsonl(&path, EmbeddingKind::Multivector).unwrap(), recs);
    }

    #[test]
    fn mixed_dims_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        std::fs::write(&path, "{\"id\":\"a\",\"vectors\":[[1,0]]}\n{\"id\":\"b\",\"vectors\":[[1,0,0]]}\n").unwrap();
        assert!(read_embeddings_jsonl(&path, EmbeddingKind::Dense).is_err());
    }
}
