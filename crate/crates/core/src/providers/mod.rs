//! Clients for external scoring services and offline stand-ins.
//!
//! Three service shapes are supported, all JSON over HTTP:
//!
//! - embeddings: `POST {base}/embeddings` with `{"model", "input": [..]}`,
//!   answered by `{"data": [{"embedding": [..]}]}` for single-vector models
//!   or `{"data": [{"embeddings": [[..], ..]}]}` for token-level models;
//! - rerank: `POST {base}/rerank` with `{"model", "query", "documents"}`,
//!   answered by `{"results": [{"index", "relevance_score"}]}`;
//! - chat: `POST {base}/chat/completions` in the usual messages shape.
//!
//! Embeddings go through a content-addressed disk cache ([`EmbeddingCache`]).
//! [`SyntheticEmbedder`] provides deterministic, tunable position bias
//! without any network access.

mod cache;
mod http;
mod import;
mod retry;
mod synthetic;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::EmbeddingCache;
pub use http::{
    HttpChat, HttpEmbedder, HttpReranker, HttpTransport, Transport, API_KEY_ENV_DEFAULT,
};
pub use import::{read_embeddings_jsonl, write_embeddings_jsonl};
pub use retry::{with_retries, RetryPolicy};
pub use synthetic::{SyntheticEmbedder, SyntheticMode};

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("HTTP {status}: {message}")]
    Http { status: u16, message: String },
    #[error("network error: {0}")]
    Network(String),
    #[error("request timed out")]
    Timeout,
    #[error("unexpected response: {0}")]
    InvalidResponse(String),
    #[error("provider returned an empty response")]
    EmptyResponse,
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted {
        attempts: u32,
        last: Box<ProviderError>,
    },
    #[error("batch items failed at indices {failed_indices:?}: {message}")]
    BatchFailed {
        failed_indices: Vec<usize>,
        message: String,
    },
    #[error("dimension mismatch at index {index}: expected {expected}, got {found}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid provider configuration: {0}")]
    Config(String),
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
    #[error("empty input")]
    EmptyInput,
    #[error("cache error at {path}: {message}")]
    Cache { path: String, message: String },
}

impl ProviderError {
    /// Transient failures worth retrying.
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Http { status, .. } => *status == 429 || *status >= 500,
            ProviderError::Network(_) | ProviderError::Timeout | ProviderError::EmptyResponse => {
                true
            }
            _ => false,
        }
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

/// Endpoint and batching settings for one external model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub base_url: String,
    pub model: String,
    pub batch_size: usize,
    pub max_retries: u32,
    #[serde(rename = "timeout_ms", with = "millis")]
    pub timeout: Duration,
    #[serde(rename = "retry_base_delay_ms", with = "millis")]
    pub retry_base_delay: Duration,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    /// Upper bound on in-flight requests.
    pub max_concurrency: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8080/v1".into(),
            model: String::new(),
            batch_size: 32,
            max_retries: 3,
            timeout: Duration::from_secs(60),
            retry_base_delay: Duration::from_millis(500),
            api_key_env: API_KEY_ENV_DEFAULT.into(),
            max_concurrency: 4,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.batch_size == 0 {
            return Err(ProviderError::Config("batch_size must be at least 1".into()));
        }
        if self.max_concurrency == 0 {
            return Err(ProviderError::Config("max_concurrency must be at least 1".into()));
        }
        if self.base_url.is_empty() {
            return Err(ProviderError::Config("base_url is empty".into()));
        }
        Ok(())
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            base_delay: self.retry_base_delay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    /// One vector per text.
    Dense,
    /// One vector per token.
    Multivector,
}

impl EmbeddingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::Dense => "dense",
            EmbeddingKind::Multivector => "multivector",
        }
    }
}

/// Vectors for one item, stored row-major (`rows × dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub item_id: String,
    pub kind: EmbeddingKind,
    pub dim: usize,
    pub data: Vec<f32>,
    pub normalized: bool,
}

impl EmbeddingRecord {
    pub fn from_rows(
        item_id: impl Into<String>,
        kind: EmbeddingKind,
        rows: &[Vec<f32>],
    ) -> Result<Self, ProviderError> {
        let item_id = item_id.into();
        let Some(first) = rows.first() else {
            return Err(ProviderError::InvalidResponse(format!("{item_id}: no vectors")));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(ProviderError::InvalidResponse(format!("{item_id}: zero-dimensional vector")));
        }
        if kind == EmbeddingKind::Dense && rows.len() != 1 {
            return Err(ProviderError::InvalidResponse(format!(
                "{item_id}: dense record with {} rows",
                rows.len()
            )));
        }
        let mut data = Vec::with_capacity(dim * rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(ProviderError::DimensionMismatch {
                    index: i,
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        let mut record = Self {
            item_id,
            kind,
            dim,
            data,
            normalized: false,
        };
        record.normalized = record.rows_are_unit(1e-4);
        Ok(record)
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn rows_are_unit(&self, tolerance: f64) -> bool {
        self.iter_rows().all(|r| (l2_norm(r) - 1.0).abs() <= tolerance)
    }

    /// Scales every non-zero row to unit L2 norm.
    pub fn normalize(&mut self) {
        let dim = self.dim;
        for row in self.data.chunks_exact_mut(dim) {
            let norm = l2_norm(row);
            if norm > 0.0 {
                for x in row.iter_mut() {
                    *x = (*x as f64 / norm) as f32;
                }
            }
        }
        self.normalized = self.rows_are_unit(1e-4);
    }
}

pub(crate) fn l2_norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt()
}

/// A text to embed together with the id its record should carry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextItem {
    pub id: String,
    pub text: String,
}

impl TextItem {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }
}

pub trait Embedder: Send + Sync {
    fn kind(&self) -> EmbeddingKind;

    /// One record per item, in input order.
    fn embed(&self, items: &[TextItem]) -> Result<Vec<EmbeddingRecord>, ProviderError>;

    /// Tokens billed by the provider so far, when it reports them.
    fn tokens_used(&self) -> Option<u64> {
        None
    }
}

pub trait Reranker: Send + Sync {
    /// One score per passage, in input order; higher is more relevant.
    fn rerank(&self, query: &str, passages: &[&str]) -> Result<Vec<f64>, ProviderError>;
}

pub trait ChatModel: Send + Sync {
    /// Identifies the model in cache keys and audit records.
    fn name(&self) -> &str;

    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;
}

/// Offline reranker scoring a passage by how many distinct query terms it
/// contains. Blind to where in the passage the terms occur.
#[derive(Debug, Clone, Copy, Default)]
pub struct OverlapReranker;

impl Reranker for OverlapReranker {
    fn rerank(&self, query: &str, passages: &[&str]) -> Result<Vec<f64>, ProviderError> {
        if passages.is_empty() {
            return Err(ProviderError::EmptyInput);
        }
        let mut terms = crate::sparse::tokenize(query);
        terms.sort_unstable();
        terms.dedup();
        Ok(passages
            .iter()
            .map(|p| {
                let doc: std::collections::HashSet<String> =
                    crate::sparse::tokenize(p).into_iter().collect();
                terms.iter().filter(|t| doc.contains(*t)).count() as f64
            })
            .collect())
    }
}
