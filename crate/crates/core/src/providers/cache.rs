//! Content-addressed embedding store.
//!
//! Layout: `<root>/<model>/<kind>/<sha256(text)>.vec` holding little-endian
//! `f32` rows, next to a `.json` sidecar with the shape. Files are written to
//! a temporary name and renamed into place, so readers never observe a
//! partial record.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EmbeddingKind, EmbeddingRecord, ProviderError};
use crate::text::sha256_hex;

#[derive(Debug, Clone)]
pub struct EmbeddingCache {
    root: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    model: String,
    kind: EmbeddingKind,
    rows: usize,
    dim: usize,
    normalized: bool,
}

fn sanitize(model: &str) -> String {
    model
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

fn cache_err(path: &Path, message: impl ToString) -> ProviderError {
    ProviderError::Cache {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ProviderError> {
    let tmp = path.with_extension(format!(
        "tmp{}-{:?}",
        std::process::id(),
        std::thread::current().id()
    ));
    fs::write(&tmp, bytes).map_err(|e| cache_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| cache_err(path, e))
}

impl EmbeddingCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path of the `.vec` file for `text`; the sidecar shares its stem.
    pub fn vector_path(&self, model: &str, kind: EmbeddingKind, text: &str) -> PathBuf {
        self.root
            .join(sanitize(model))
            .join(kind.as_str())
            .join(format!("{}.vec", sha256_hex(text.as_bytes())))
    }

    /// Cached record for `text`, relabelled with `item_id`.
    pub fn get(
        &self,
        model: &str,
        kind: EmbeddingKind,
        text: &str,
        item_id: &str,
    ) -> Result<Option<EmbeddingRecord>, ProviderError> {
        let vec_path = self.vector_path(model, kind, text);
        let meta_path = vec_path.with_extension("json");
        if !meta_path.exists() || !vec_path.exists() {
            return Ok(None);
        }
        let meta: Sidecar = serde_json::from_slice(&fs::read(&meta_path).map_err(|e| cache_err(&meta_path, e))?)
            .map_err(|e| cache_err(&meta_path, e))?;
        let bytes = fs::read(&vec_path).map_err(|e| cache_err(&vec_path, e))?;
        if bytes.len() != meta.rows * meta.dim * 4 || meta.dim == 0 {
            return Err(cache_err(&vec_path, "size disagrees with sidecar"));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok(Some(EmbeddingRecord {
            item_id: item_id.to_string(),
            kind: meta.kind,
            dim: meta.dim,
            data,
            normalized: meta.normalized,
        }))
    }

    pub fn put(&self, model: &str, text: &str, record: &EmbeddingRecord) -> Result<(), ProviderError> {
        let vec_path = self.vector_path(model, record.kind, text);
        let dir = vec_path.parent().expect("cache path has a parent");
        fs::create_dir_all(dir).map_err(|e| cache_err(dir, e))?;
        let bytes: Vec<u8> = record.data.iter().flat_map(|x| x.to_le_bytes()).collect();
        write_atomic(&vec_path, &bytes)?;
        let meta = Sidecar {
            model: model.to_string(),
            kind: record.kind,
            rows: record.rows(),
            dim: record.dim,
            normalized: record.normalized,
        };
        let json = serde_json::to_vec_pretty(&meta).map_err(|e| cache_err(&vec_path, e))?;
        // sidecar last: its presence marks the record complete
        write_atomic(&vec_path.with_extension("json"), &json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_follows_model_kind_hash() {
        let cache = EmbeddingCache::new("/c");
        let p = cache.vector_path("org/model:v1", EmbeddingKind::Dense, "hello");
        assert_eq!(
            p,
            PathBuf::from("/c/org_model_v1/dense/2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824.vec")
        );
    }

    #[test]
    fn miss_returns_none() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EmbeddingCache::new(dir.path());
        assert!(cache.get("m", EmbeddingKind::Dense, "x", "a").unwrap().is_none());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_identical(
            rows in proptest::collection::vec(proptest::collection::vec(any::<f32>(), 3), 1..5),
            text in ".{0,40}",
        ) {
            let dir = tempfile::tempdir().unwrap();
            let cache = EmbeddingCache::new(dir.path());
            let record = EmbeddingRecord::from_rows("id", EmbeddingKind::Multivector, &rows).unwrap();
            cache.put("m", &text, &record).unwrap();
            let back = cache.get("m", EmbeddingKind::Multivector, &text, "id").unwrap().unwrap();
            let a: Vec<u32> = record.data.iter().map(|x| x.to_bits()).collect();
            let b: Vec<u32> = back.data.iter().map(|x| x.to_bits()).collect();
            prop_assert_eq!(a, b);
            prop_assert_eq!(back.dim, record.dim);
            prop_assert_eq!(back.normalized, record.normalized);
        }
    }
}
