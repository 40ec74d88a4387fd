use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde_json::{json, Value};

use super::{
    with_retries, ChatModel, EmbeddingCache, EmbeddingKind, EmbeddingRecord, Embedder,
    ProviderConfig, ProviderError, Reranker, TextItem,
};

pub const API_KEY_ENV_DEFAULT: &str = "MYOPIC_API_KEY";

/// Sends one JSON request and returns the decoded JSON body.
pub trait Transport: Send + Sync {
    fn post_json(&self, path: &str, body: &Value) -> Result<Value, ProviderError>;
}

/// Blocking HTTP transport rooted at `config.base_url`.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: Option<String>,
}

impl HttpTransport {
    /// Reads the API key from `config.api_key_env` if it is set.
    pub fn new(config: &ProviderConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(Self {
            client,
            base_url: config.base_url.trim_end_matches('/').to_string(),
            api_key: std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty()),
        })
    }

    /// Like [`HttpTransport::new`] but fails when the key variable is unset.
    pub fn with_required_key(config: &ProviderConfig) -> Result<Self, ProviderError> {
        let t = Self::new(config)?;
        if t.api_key.is_none() {
            return Err(ProviderError::MissingApiKey(config.api_key_env.clone()));
        }
        Ok(t)
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, path: &str, body: &Value) -> Result<Value, ProviderError> {
        let url = format!("{}/{}", self.base_url, path.trim_start_matches('/'));
        let mut req = self.client.post(&url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Network(e.to_string())
            }
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ProviderError::Network(e.to_string()))?;
        if !status.is_success() {
            return Err(ProviderError::Http {
                status: status.as_u16(),
                message: text.chars().take(500).collect(),
            });
        }
        serde_json::from_str(&text).map_err(|e| ProviderError::InvalidResponse(e.to_string()))
    }
}

fn parse_vector(v: &Value) -> Option<Vec<f32>> {
    v.as_array()?
        .iter()
        .map(|x| x.as_f64().map(|f| f as f32))
        .collect()
}

fn parse_matrix(v: &Value) -> Option<Vec<Vec<f32>>> {
    v.as_array()?.iter().map(parse_vector).collect()
}

/// Embedding endpoint client with batching, retries and an optional cache.
pub struct HttpEmbedder {
    config: ProviderConfig,
    kind: EmbeddingKind,
    transport: Arc<dyn Transport>,
    cache: Option<EmbeddingCache>,
    tokens_used: AtomicU64,
    requests: AtomicU64,
}

impl HttpEmbedder {
    pub fn new(
        config: ProviderConfig,
        kind: EmbeddingKind,
        transport: Arc<dyn Transport>,
        cache: Option<EmbeddingCache>,
    ) -> Result<Self, ProviderError> {
        config.validate()?;
        Ok(Self {
            config,
            kind,
            transport,
            cache,
            tokens_used: AtomicU64::new(0),
            requests: AtomicU64::new(0),
        })
    }

    /// Provider-reported token usage summed over all requests.
    pub fn tokens_used(&self) -> u64 {
        self.tokens_used.load(Ordering::Relaxed)
    }

    /// Number of HTTP requests issued, retries included.
    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    /// Embeds one batch; returns per-position records or `None` for items
    /// the provider did not return.
    fn request_batch(&self, texts: &[&str]) -> Result<Vec<Option<Vec<Vec<f32>>>>, ProviderError> {
        let body = json!({ "model": self.config.model, "input": texts });
        let (resp, _) = with_retries(&self.config.retry_policy(), |_| {
            self.requests.fetch_add(1, Ordering::Relaxed);
            self.transport.post_json("embeddings", &body)
        })?;
        if let Some(n) = resp
            .pointer("/usage/total_tokens")
            .or_else(|| resp.pointer("/usage/prompt_tokens"))
            .and_then(Value::as_u64)
        {
            self.tokens_used.fetch_add(n, Ordering::Relaxed);
        }
        let data = resp
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::InvalidResponse("missing data array".into()))?;
        let mut out = vec![None; texts.len()];
        for (pos, entry) in data.iter().enumerate() {
            let idx = entry.get("index").and_then(Value::as_u64).map_or(pos, |i| i as usize);
            if idx >= texts.len() || entry.get("error").is_some_and(|e| !e.is_null()) {
                continue;
            }
            let rows = match self.kind {
                EmbeddingKind::Dense => entry.get("embedding").and_then(parse_vector).map(|v| vec![v]),
                EmbeddingKind::Multivector => entry
                    .get("embeddings")
                    .or_else(|| entry.get("embedding"))
                    .and_then(parse_matrix),
            };
            out[idx] = rows.filter(|r| !r.is_empty());
        }
        Ok(out)
    }
}

impl Embedder for HttpEmbedder {
    fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    fn tokens_used(&self) -> Option<u64> {
        Some(HttpEmbedder::tokens_used(self))
    }

    fn embed(&self, items: &[TextItem]) -> Result<Vec<EmbeddingRecord>, ProviderError> {
        if items.is_empty() {
            return Err(ProviderError::EmptyInput);
        }
        let model = self.config.model.as_str();
        let mut results: Vec<Option<EmbeddingRecord>> = Vec::with_capacity(items.len());
        let mut misses = Vec::new();
        for (i, item) in items.iter().enumerate() {
            let hit = match &self.cache {
                Some(c) => c.get(model, self.kind, &item.text, &item.id)?,
                None => None,
            };
            if hit.is_none() {
                misses.push(i);
            }
            results.push(hit);
        }

        let batches: Vec<&[usize]> = misses.chunks(self.config.batch_size).collect();
        let mut failed = Vec::new();
        let mut failure_message = String::new();
        for group in batches.chunks(self.config.max_concurrency) {
            let responses: Vec<_> = std::thread::scope(|s| {
                let handles: Vec<_> = group
                    .iter()
                    .map(|batch| {
                        let texts: Vec<&str> = batch.iter().map(|&i| items[i].text.as_str()).collect();
                        s.spawn(move || self.request_batch(&texts))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("embedding worker panicked")).collect()
            });
            for (batch, response) in group.iter().zip(responses) {
                match response {
                    Ok(rows) => {
                        for (&i, rows) in batch.iter().zip(rows) {
                            match rows {
                                Some(rows) => {
                                    let record = EmbeddingRecord::from_rows(&items[i].id, self.kind, &rows)?;
                                    results[i] = Some(record);
                                }
                                None => {
                                    failed.push(i);
                                    failure_message = "provider returned no vector".into();
                                }
                            }
                        }
                    }
                    Err(e) => {
                        failed.extend_from_slice(batch);
                        failure_message = e.to_string();
                    }
                }
            }
        }

        let mut dim = None;
        for (i, r) in results.iter().enumerate() {
            if let Some(r) = r {
                let expected = *dim.get_or_insert(r.dim);
                if r.dim != expected {
                    return Err(ProviderError::DimensionMismatch {
                        index: i,
                        expected,
                        found: r.dim,
                    });
                }
            }
        }
        if let Some(cache) = &self.cache {
            for &i in &misses {
                if let Some(r) = &results[i] {
                    cache.put(model, &items[i].text, r)?;
                }
            }
        }
        if !failed.is_empty() {
            failed.sort_unstable();
            return Err(ProviderError::BatchFailed {
                failed_indices: failed,
                message: failure_message,
            });
        }
        Ok(results.into_iter().map(|r| r.expect("all items resolved")).collect())
    }
}

/// Cross-encoder endpoint client.
pub struct HttpReranker {
    config: ProviderConfig,
    transport: Arc<dyn Transport>,
    requests: AtomicU64,
}

impl HttpReranker {
    pub fn new(config: ProviderConfig, transport: Arc<dyn Transport>) -> Result<Self, ProviderError> {
        config.validate()?;
        Ok(Self {
            config,
            transport,
            requests: AtomicU64::new(0),
        })
    }

    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }
}

impl Reranker for HttpReranker {
    fn rerank(&self, query: &str, passages: &[&str]) -> Result<Vec<f64>, ProviderError> {
        if passages.is_empty() {
            return Err(ProviderError::EmptyInput);
        }
        let mut scores = Vec::with_capacity(passages.len());
        for (b, batch) in passages.chunks(self.config.batch_size).enumerate() {
            let body = json!({ "model": self.config.model, "query": query, "documents": batch });
            let (resp, _) = with_retries(&self.config.retry_policy(), |_| {
                self.requests.fetch_add(1, Ordering::Relaxed);
                self.transport.post_json("rerank", &body)
            })?;
            let results = resp
                .get("results")
                .and_then(Value::as_array)
                .ok_or_else(|| ProviderError::InvalidResponse("missing results array".into()))?;
            let mut batch_scores = vec![None; batch.len()];
            for entry in results {
                let idx = entry.get("index").and_then(Value::as_u64).map(|i| i as usize);
                let score = entry
                    .get("relevance_score")
                    .or_else(|| entry.get("score"))
                    .and_then(Value::as_f64);
                if let (Some(i), Some(s)) = (idx, score) {
                    if i < batch.len() {
                        batch_scores[i] = Some(s);
                    }
                }
            }
            let missing: Vec<usize> = batch_scores
                .iter()
                .enumerate()
                .filter(|(_, s)| s.is_none())
                .map(|(i, _)| b * self.config.batch_size + i)
                .collect();
            if !missing.is_empty() {
                return Err(ProviderError::BatchFailed {
                    failed_indices: missing,
                    message: "reranker returned no score".into(),
                });
            }
            scores.extend(batch_scores.into_iter().flatten());
        }
        Ok(scores)
    }
}

/// Chat-completion endpoint client. One request per call; retries are the
/// caller's concern so attempts can be recorded.
pub struct HttpChat {
    config: ProviderConfig,
    transport: Arc<dyn Transport>,
}

impl HttpChat {
    pub fn new(config: ProviderConfig, transport: Arc<dyn Transport>) -> Result<Self, ProviderError> {
        config.validate()?;
        Ok(Self { config, transport })
    }
}

impl ChatModel for HttpChat {
    fn name(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let resp = self.transport.post_json("chat/completions", &body)?;
        let content = resp
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| ProviderError::InvalidResponse("missing choices[0].message.content".into()))?;
        if content.trim().is_empty() {
            return Err(ProviderError::EmptyResponse);
        }
        Ok(content.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;
    use std::time::Duration;

    type Handler = dyn Fn(&str, &Value) -> Result<Value, ProviderError> + Send + Sync;

    struct StubTransport {
        handler: Box<Handler>,
        calls: Mutex<Vec<Value>>,
    }

    impl StubTransport {
        fn new(f: impl Fn(&str, &Value) -> Result<Value, ProviderError> + Send + Sync + 'static) -> Arc<Self> {
            Arc::new(Self {
                handler: Box::new(f),
                calls: Mutex::new(Vec::new()),
            })
        }
        fn calls(&self) -> usize {
            self.calls.lock().unwrap().len()
        }
    }

    impl Transport for StubTransport {
        fn post_json(&self, path: &str, body: &Value) -> Result<Value, ProviderError> {
            self.calls.lock().unwrap().push(body.clone());
            (self.handler)(path, body)
        }
    }

    fn config(batch_size: usize) -> ProviderConfig {
        ProviderConfig {
            model: "stub".into(),
            batch_size,
            max_retries: 2,
            retry_base_delay: Duration::ZERO,
            ..Default::default()
        }
    }

    fn fixed_vectors(_: &str, body: &Value) -> Result<Value, ProviderError> {
        let n = body["input"].as_array().unwrap().len();
        let data: Vec<Value> = (0..n)
            .map(|i| json!({ "index": i, "embedding": [1.0, 0.0, 0.0, i as f64] }))
            .collect();
        Ok(json!({ "data": data, "usage": { "total_tokens": 3 } }))
    }

    #[test]
    fn fixed_four_dim_vectors() {
        let t = StubTransport::new(fixed_vectors);
        let e = HttpEmbedder::new(config(8), EmbeddingKind::Dense, t, None).unwrap();
        let recs = e.embed(&[TextItem::new("a", "x"), TextItem::new("b", "y")]).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.dim == 4 && r.rows() == 1));
        assert_eq!(recs[1].item_id, "b");
        assert_eq!(recs[1].row(0), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(e.tokens_used(), 3);
    }

    #[test]
    fn second_call_is_served_from_cache() {
        let dir = tempfile::tempdir().unwrap();
        let t = StubTransport::new(fixed_vectors);
        let e = HttpEmbedder::new(config(8), EmbeddingKind::Dense, t.clone(), Some(EmbeddingCache::new(dir.path()))).unwrap();
        let first = e.embed(&[TextItem::new("a", "same")]).unwrap();
        let second = e.embed(&[TextItem::new("a", "same")]).unwrap();
        assert_eq!(t.calls(), 1);
        assert_eq!(first, second);
    }

    #[test]
    fn partial_failure_lists_index_and_skips_its_cache_write() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EmbeddingCache::new(dir.path());
        let t = StubTransport::new(|_, body| {
            let n = body["input"].as_array().unwrap().len();
            let data: Vec<Value> = (0..n)
                .map(|i| {
                    if i == 1 {
                        json!({ "index": i, "error": "content filtered" })
                    } else {
                        json!({ "index": i, "embedding": [0.5, 0.5] })
                    }
                })
                .collect();
            Ok(json!({ "data": data }))
        });
        let e = HttpEmbedder::new(config(8), EmbeddingKind::Dense, t, Some(cache.clone())).unwrap();
        let items = [TextItem::new("a", "t0"), TextItem::new("b", "t1"), TextItem::new("c", "t2")];
        let err = e.embed(&items).unwrap_err();
        assert!(matches!(&err, ProviderError::BatchFailed { failed_indices, .. } if failed_indices == &[1]), "{err}");
        assert!(cache.get("stub", EmbeddingKind::Dense, "t1", "b").unwrap().is_none());
        assert!(cache.get("stub", EmbeddingKind::Dense, "t0", "a").unwrap().is_some());
    }

    #[test]
    fn mixed_dimensions_are_rejected() {
        let t = StubTransport::new(|_, _| {
            Ok(json!({ "data": [ { "embedding": [1.0, 0.0] }, { "embedding": [1.0, 0.0, 0.0] } ] }))
        });
        let e = HttpEmbedder::new(config(8), EmbeddingKind::Dense, t, None).unwrap();
        let err = e.embed(&[TextItem::new("a", "x"), TextItem::new("b", "y")]).unwrap_err();
        assert!(matches!(err, ProviderError::DimensionMismatch { index: 1, expected: 2, found: 3 }));
    }

    #[test]
    fn multivector_payloads() {
        let t = StubTransport::new(|_, _| Ok(json!({ "data": [ { "embeddings": [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]] } ] })));
        let e = HttpEmbedder::new(config(8), EmbeddingKind::Multivector, t, None).unwrap();
        let recs = e.embed(&[TextItem::new("a", "x y z")]).unwrap();
        assert_eq!(recs[0].rows(), 3);
        assert!(recs[0].normalized);
    }

    #[test]
    fn whole_batch_failure_after_retries() {
        let t = StubTransport::new(|_, _| Err(ProviderError::Http { status: 503, message: "busy".into() }));
        let e = HttpEmbedder::new(config(2), EmbeddingKind::Dense, t.clone(), None).unwrap();
        let items: Vec<_> = (0..3).map(|i| TextItem::new(format!("{i}"), format!("t{i}"))).collect();
        let err = e.embed(&items).unwrap_err();
        assert!(matches!(&err, ProviderError::BatchFailed { failed_indices, .. } if failed_indices == &[0, 1, 2]));
        // two batches, each tried 1 + max_retries times
        assert_eq!(t.calls(), 6);
    }

    #[test]
    fn rerank_batches_are_concatenated_in_order() {
        let t = StubTransport::new(|_, body| {
            let docs = body["documents"].as_array().unwrap();
            // reversed result order must still map back by index
            let results: Vec<Value> = docs
                .iter()
                .enumerate()
                .rev()
                .map(|(i, d)| json!({ "index": i, "relevance_score": d.as_str().unwrap().parse::<f64>().unwrap() }))
                .collect();
            Ok(json!({ "results": results }))
        });
        let r = HttpReranker::new(config(100), t.clone()).unwrap();
        let passages: Vec<String> = (0..250).map(|i| i.to_string()).collect();
        let refs: Vec<&str> = passages.iter().map(String::as_str).collect();
        let scores = r.rerank("q", &refs).unwrap();
        assert_eq!(t.calls(), 3);
        assert_eq!(scores, (0..250).map(f64::from).collect::<Vec<_>>());
        assert!(matches!(r.rerank("q", &[]), Err(ProviderError::EmptyInput)));
    }

    #[test]
    fn chat_extracts_message_content() {
        let t = StubTransport::new(|path, body| {
            assert_eq!(path, "chat/completions");
            assert_eq!(body["messages"][0]["content"], "hi");
            Ok(json!({ "choices": [ { "message": { "role": "assistant", "content": "SUMMARY" } } ] }))
        });
        let chat = HttpChat::new(config(1), t).unwrap();
        assert_eq!(chat.complete("hi").unwrap(), "SUMMARY");
    }
}
