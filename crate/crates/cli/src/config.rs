//! Settings resolution: command-line flag, then configuration file, then
//! `MYOPIC_*` environment variable, then the built-in default.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use myopic_core::ProviderConfig;
use serde::Deserialize;

use crate::exit::InputError;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub k: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub embedder: Option<String>,
    pub dim: Option<usize>,
    pub reranker: Option<String>,
    pub top_n: Option<usize>,
    pub min_words: Option<usize>,
    pub max_words: Option<usize>,
    pub chunk_size: Option<usize>,
    pub inclusive_bins: Option<bool>,
    pub bins: Option<Vec<usize>>,
    pub embedding: Option<ProviderConfig>,
    pub rerank: Option<ProviderConfig>,
    pub chat: Option<ProviderConfig>,
}

#[derive(Debug, Default)]
pub struct Settings {
    pub file: FileConfig,
}

fn from_env<T: FromStr>(key: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    match std::env::var(key) {
        Ok(v) if !v.is_empty() => v
            .parse()
            .map(Some)
            .map_err(|e| InputError::new(format!("environment variable {key}={v:?}: {e}")).into()),
        _ => Ok(None),
    }
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError::new(format!("cannot read config file {}: {e}", path.display())))?;
        let file: FileConfig = toml::from_str(&text)
            .map_err(|e| InputError::new(format!("invalid config file {}: {e}", path.display())))?;
        Ok(Self { file })
    }

    /// First of `flag`, `file`, then the environment variable `MYOPIC_{name}`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, file: Option<T>, name: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        if file.is_some() {
            return Ok(file);
        }
        from_env(&format!("MYOPIC_{name}"))
    }

    pub fn seed(&self, flag: Option<u64>) -> Result<u64> {
        Ok(self.pick(flag, self.file.seed, "SEED")?.unwrap_or(0))
    }

    pub fn k(&self, flag: Option<usize>, default: usize) -> Result<usize> {
        Ok(self.pick(flag, self.file.k, "K")?.unwrap_or(default))
    }

    pub fn cache_dir(&self, flag: Option<PathBuf>) -> Result<Option<PathBuf>> {
        self.pick(flag, self.file.cache_dir.clone(), "CACHE_DIR")
    }

    /// Provider settings for `section` (`embedding`, `rerank` or `chat`).
    ///
    /// Without a file section, `MYOPIC_{SECTION}_BASE_URL` and
    /// `MYOPIC_{SECTION}_MODEL` fill in the endpoint.
    pub fn provider(&self, section: &str) -> Result<ProviderConfig> {
        let from_file = match section {
            "embedding" => &self.file.embedding,
            "rerank" => &self.file.rerank,
            "chat" => &self.file.chat,
            other => unreachable!("unknown provider section {other}"),
        };
        if let Some(cfg) = from_file {
            return Ok(cfg.clone());
        }
        let upper = section.to_uppercase();
        let mut cfg = ProviderConfig::default();
        if let Some(url) = from_env::<String>(&format!("MYOPIC_{upper}_BASE_URL"))? {
            cfg.base_url = url;
        }
        if let Some(model) = from_env::<String>(&format!("MYOPIC_{upper}_MODEL"))? {
            cfg.model = model;
        }
        if cfg.model.is_empty() {
            return Err(InputError::new(format!(
                "no {section} model configured: add a [{section}] section to the config file or set MYOPIC_{upper}_MODEL"
            ))
            .into());
        }
        Ok(cfg)
    }
}

pub fn jobs(settings: &Settings, flag: Option<usize>) -> Result<Option<usize>> {
    settings.pick(flag, settings.file.jobs, "JOBS").context("resolving --jobs")
}
