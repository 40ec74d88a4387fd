pub mod bench;
pub mod diagnose;
pub mod embed;
pub mod eval;
pub mod report;
pub mod run;

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use myopic_core::providers::{
    EmbeddingCache, HttpEmbedder, HttpTransport, SyntheticEmbedder, SyntheticMode,
};
use myopic_core::{Benchmark, EmbeddingKind, Embedder};

use crate::args::EmbedderArgs;
use crate::config::Settings;
use crate::exit::InputError;

pub const DEFAULT_DIM: usize = 256;

pub fn read_bundle(dir: &Path) -> Result<Benchmark> {
    if !dir.is_dir() {
        return Err(InputError::new(format!("bundle directory {} does not exist", dir.display())).into());
    }
    myopic_core::corpus::read_bundle(dir).with_context(|| format!("reading bundle {}", dir.display()))
}

pub fn write_output(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn require_file(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(InputError::new(format!("{} does not exist", path.display())).into());
    }
    Ok(())
}

/// Builds the embedder selected by `--embedder` (or its configured default).
pub fn build_embedder(args: &EmbedderArgs, settings: &Settings, kind: EmbeddingKind) -> Result<Box<dyn Embedder>> {
    let spec = settings
        .pick(args.embedder.clone(), settings.file.embedder.clone(), "EMBEDDER")?
        .ok_or_else(|| InputError::new("no embedder selected: pass --embedder http or --embedder synthetic:<mode>"))?;
    if let Some(mode) = spec.strip_prefix("synthetic:") {
        let mode: SyntheticMode = mode.parse().map_err(|e| InputError::new(format!("--embedder {spec}: {e}")))?;
        let dim = settings.pick(args.dim, settings.file.dim, "DIM")?.unwrap_or(DEFAULT_DIM);
        let seed = settings.seed(args.seed)?;
        let embedder = SyntheticEmbedder::new(mode, dim, seed).map_err(|e| InputError::new(e.to_string()))?;
        return Ok(Box::new(match kind {
            EmbeddingKind::Dense => embedder,
            EmbeddingKind::Multivector => embedder.multivector(),
        }));
    }
    if spec != "http" {
        return Err(InputError::new(format!("unknown embedder {spec:?}; expected http or synthetic:<mode>")).into());
    }
    let config = settings.provider("embedding")?;
    let transport = Arc::new(HttpTransport::new(&config)?);
    let cache = settings.cache_dir(args.cache_dir.clone())?.map(EmbeddingCache::new);
    Ok(Box::new(HttpEmbedder::new(config, kind, transport, cache)?))
}
