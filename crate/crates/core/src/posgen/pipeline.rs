use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use super::prompts::{generate_qa, summarize, AuditLog, PromptTemplate};
use super::{position_tags, GeneratedQA, PosgenError, QuestionType};
use crate::corpus::{chunk_words, Benchmark, Passage, PositionedQuery, SegmentTag};
use crate::providers::{ChatModel, ProviderError, RetryPolicy};
use crate::text::sha256_hex;

#[derive(Debug, Clone)]
pub struct PosgenConfig {
    pub chunk_size: usize,
    /// Passages processed at the same time.
    pub max_concurrency: usize,
    pub retry: RetryPolicy,
    pub cache_dir: Option<PathBuf>,
    pub summarize_template: PromptTemplate,
    pub qa_template: PromptTemplate,
}

impl Default for PosgenConfig {
    fn default() -> Self {
        Self {
            chunk_size: 256,
            max_concurrency: 4,
            retry: RetryPolicy {
                max_retries: 3,
                base_delay: std::time::Duration::from_millis(500),
            },
            cache_dir: None,
            summarize_template: PromptTemplate::summarize(),
            qa_template: PromptTemplate::generate_qa(),
        }
    }
}

/// Chat responses on disk, keyed by model, template hash and prompt hash.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    root: PathBuf,
}

impl ResponseCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path(&self, model: &str, template_hash: &str, prompt: &str) -> PathBuf {
        let model_dir: String = model
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
            .collect();
        let key = sha256_hex(format!("{template_hash}\0{}", sha256_hex(prompt.as_bytes())).as_bytes());
        self.root.join(model_dir).join(format!("{key}.txt"))
    }

    pub fn get(&self, path: &Path) -> Option<String> {
        fs::read_to_string(path).ok()
    }

    pub fn put(&self, path: &Path, response: &str) -> Result<(), ProviderError> {
        let err = |e: std::io::Error| ProviderError::Cache {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let dir = path.parent().expect("cache paths have a parent");
        fs::create_dir_all(dir).map_err(err)?;
        static COUNTER: AtomicUsize = AtomicUsize::new(0);
        let tmp = path.with_extension(format!("tmp{}-{}", std::process::id(), COUNTER.fetch_add(1, Ordering::Relaxed)));
        fs::write(&tmp, response).map_err(err)?;
        fs::rename(&tmp, path).map_err(err)
    }
}

struct CachedChat<'a> {
    inner: &'a dyn ChatModel,
    cache: &'a ResponseCache,
    template_hash: String,
}

impl ChatModel for CachedChat<'_> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let path = self.cache.path(self.inner.name(), &self.template_hash, prompt);
        if let Some(hit) = self.cache.get(&path) {
            return Ok(hit);
        }
        let response = self.inner.complete(prompt)?;
        if let Err(e) = self.cache.put(&path, &response) {
            tracing::warn!(error = %e, "could not cache chat response");
        }
        Ok(response)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassageFailure {
    pub passage_id: String,
    /// Chunk index, for failures during question generation.
    pub chunk: Option<usize>,
    pub message: String,
}

/// Everything produced by one synthesis run.
#[derive(Debug, Clone)]
pub struct FinewebBuild {
    pub benchmark: Benchmark,
    /// Generated pairs, index-aligned with `benchmark.queries`.
    pub generated: Vec<GeneratedQA>,
    /// Responses that did not match the expected output format.
    pub filtered_responses: usize,
    pub summaries_over_limit: usize,
    pub failures: Vec<PassageFailure>,
}

impl FinewebBuild {
    /// Queries per tag; a query with two tags counts under both.
    pub fn tag_counts(&self) -> [(SegmentTag, usize); 3] {
        SegmentTag::ALL.map(|t| {
            let n = self
                .benchmark
                .queries
                .iter()
                .filter(|q| q.segment_tags.as_ref().is_some_and(|s| s.contains(&t)))
                .count();
            (t, n)
        })
    }
}

#[derive(Default)]
struct PassageOutcome {
    chunks: Vec<(usize, Vec<SegmentTag>, Vec<GeneratedQA>)>,
    filtered: usize,
    over_limit: bool,
    failures: Vec<PassageFailure>,
}

fn process_passage(
    passage: &Passage,
    summarizer: &dyn ChatModel,
    questioner: &dyn ChatModel,
    config: &PosgenConfig,
    audit: &AuditLog,
) -> PassageOutcome {
    let mut out = PassageOutcome::default();
    let fail = |chunk: Option<usize>, e: PosgenError| PassageFailure {
        passage_id: passage.id.clone(),
        chunk,
        message: e.to_string(),
    };
    if passage.word_count < 3 {
        out.failures.push(fail(None, PosgenError::Degenerate(passage.word_count)));
        return out;
    }
    let summary = match summarize(&passage.id, &passage.text, &config.summarize_template, summarizer, &config.retry, audit) {
        Ok(s) => s,
        Err(e) => {
            out.failures.push(fail(None, e));
            return out;
        }
    };
    out.over_limit = summary.over_limit;
    for (i, chunk) in chunk_words(&passage.text, config.chunk_size).iter().enumerate() {
        let tags = match position_tags(&chunk.span) {
            Ok(t) => t,
            Err(e) => {
                out.failures.push(fail(Some(i), e));
                continue;
            }
        };
        match generate_qa(&passage.id, &summary.text, chunk, &config.qa_template, questioner, &config.retry, audit) {
            Ok(r) if r.filtered => out.filtered += 1,
            Ok(r) => out.chunks.push((i, tags, r.items)),
            Err(e) => out.failures.push(fail(Some(i), e)),
        }
    }
    out
}

/// Summarizes each passage, chunks it, generates questions per chunk and
/// tags them by position.
///
/// Failures are collected per passage and chunk and do not stop the run.
/// Output is ordered by passage id, then chunk index, then the order of the
/// model's answer; query ids are `{passage}-c{chunk}-q{item}`.
pub fn build_fineweb_benchmark(
    name: &str,
    passages: &[Passage],
    llm: &dyn ChatModel,
    config: &PosgenConfig,
    audit: &AuditLog,
) -> Result<FinewebBuild, PosgenError> {
    let mut sorted: Vec<&Passage> = passages.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    let cache = config.cache_dir.as_ref().map(ResponseCache::new);
    let wrap = |t: &PromptTemplate| {
        cache.as_ref().map(|c| CachedChat {
            inner: llm,
            cache: c,
            template_hash: t.hash(),
        })
    };
    let (cached_sum, cached_qa) = (wrap(&config.summarize_template), wrap(&config.qa_template));
    let summarizer: &dyn ChatModel = cached_sum.as_ref().map_or(llm, |c| c as &dyn ChatModel);
    let questioner: &dyn ChatModel = cached_qa.as_ref().map_or(llm, |c| c as &dyn ChatModel);

    let results: Vec<Mutex<Option<PassageOutcome>>> = sorted.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..config.max_concurrency.clamp(1, sorted.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(passage) = sorted.get(i) else { break };
                let outcome = process_passage(passage, summarizer, questioner, config, audit);
                *results[i].lock().unwrap() = Some(outcome);
            });
        }
    });

    let mut queries = Vec::new();
    let mut generated = Vec::new();
    let mut build = FinewebBuild {
        benchmark: Benchmark {
            name: name.to_string(),
            corpus: Vec::new(),
            queries: Vec::new(),
            bin_scheme: None,
        },
        generated: Vec::new(),
        filtered_responses: 0,
        summaries_over_limit: 0,
        failures: Vec::new(),
    };
    for (passage, slot) in sorted.iter().zip(results) {
        let outcome = slot.into_inner().unwrap().expect("every passage is processed");
        build.filtered_responses += outcome.filtered;
        build.summaries_over_limit += usize::from(outcome.over_limit);
        build.failures.extend(outcome.failures);
        for (chunk, tags, items) in outcome.chunks {
            for (j, qa) in items.into_iter().enumerate() {
                queries.push(PositionedQuery {
                    id: format!("{}-c{chunk}-q{j}", passage.id),
                    text: qa.question.clone(),
                    answer_start: None,
                    segment_tags: Some(tags.clone()),
                    relevant_passage_ids: vec![passage.id.clone()],
                });
                generated.push(qa);
            }
        }
    }
    build.benchmark.corpus = sorted.into_iter().cloned().collect();
    build.benchmark.queries = queries;
    build.generated = generated;
    build.benchmark.validate()?;
    Ok(build)
}

/// Offline chat model for dry runs.
///
/// Summaries are the first 60 words of the document. Each chunk gets
/// questions quoting its opening and closing words.
#[derive(Debug, Clone)]
pub struct StubChat {
    pub qa_per_chunk: usize,
}

impl Default for StubChat {
    fn default() -> Self {
        Self { qa_per_chunk: 2 }
    }
}

fn between<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.find(open)? + open.len();
    let end = text.rfind(close)?;
    (start <= end).then(|| &text[start..end])
}

impl ChatModel for StubChat {
    fn name(&self) -> &str {
        "stub"
    }

    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        if let Some(doc) = between(prompt, "<Document> ", " </Document>") {
            let words: Vec<&str> = doc.split_whitespace().take(60).collect();
            return Ok(words.join(" "));
        }
        let chunk = between(prompt, "<chunk> ", " </chunk>")
            .ok_or_else(|| ProviderError::InvalidResponse("stub cannot recognise the prompt".into()))?;
        let words: Vec<&str> = chunk.split_whitespace().collect();
        let items: Vec<serde_json::Value> = (0..self.qa_per_chunk)
            .filter(|_| !words.is_empty())
            .map(|j| {
                let width = 8.min(words.len());
                let start = if self.qa_per_chunk <= 1 {
                    0
                } else {
                    (words.len() - width) * j / (self.qa_per_chunk - 1)
                };
                let quote = words[start..start + width].join(" ");
                let question_type = if j == 0 { QuestionType::Simple } else { QuestionType::Complicated };
                serde_json::json!({
                    "question": format!("What is meant by \"{quote}\"?"),
                    "answer": quote,
                    "type": question_type,
                })
            })
            .collect();
        Ok(serde_json::to_string(&items).expect("JSON values serialize"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicU32;
    use std::time::Duration;

    fn passage(id: &str, words: usize) -> Passage {
        Passage::new(id, (0..words).map(|i| format!("{id}w{i}")).collect::<Vec<_>>().join(" "))
    }

    fn config() -> PosgenConfig {
        PosgenConfig {
            retry: RetryPolicy {
                max_retries: 1,
                base_delay: Duration::ZERO,
            },
            ..Default::default()
        }
    }

    #[test]
    fn pipeline_arithmetic() {
        let passages = [passage("b", 768), passage("a", 768)];
        let audit = AuditLog::new();
        let build = build_fineweb_benchmark("fw", &passages, &StubChat::default(), &config(), &audit).unwrap();
        assert_eq!(build.benchmark.corpus.len(), 2);
        assert_eq!(build.benchmark.queries.len(), 12);
        assert_eq!(build.benchmark.queries[0].id, "a-c0-q0");
        assert_eq!(build.benchmark.queries[11].id, "b-c2-q1");
        assert_eq!(build.generated.len(), 12);
        assert_eq!(build.benchmark.queries[0].segment_tags.as_deref(), Some(&[SegmentTag::Beginning][..]));
        assert_eq!(build.benchmark.queries[5].segment_tags.as_deref(), Some(&[SegmentTag::End][..]));
        assert_eq!(build.filtered_responses, 0);
        assert!(build.failures.is_empty());
        assert_eq!(audit.snapshot().len(), 2 + 6);
    }

    #[test]
    fn deterministic_across_concurrency() {
        let passages: Vec<Passage> = (0..9).map(|i| passage(&format!("p{i}"), 300 + 97 * i)).collect();
        let mut one = config();
        one.max_concurrency = 1;
        let mut many = config();
        many.max_concurrency = 8;
        let a = build_fineweb_benchmark("fw", &passages, &StubChat::default(), &one, &AuditLog::new()).unwrap();
        let b = build_fineweb_benchmark("fw", &passages, &StubChat::default(), &many, &AuditLog::new()).unwrap();
        assert_eq!(a.benchmark, b.benchmark);
        assert_eq!(a.generated, b.generated);
    }

    /// Returns prose for the chunk of passage `bad` and fails every call
    /// for passage `down`.
    struct Flaky;

    impl ChatModel for Flaky {
        fn name(&self) -> &str {
            "flaky"
        }
        fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
            if prompt.contains("downw0") {
                return Err(ProviderError::Http {
                    status: 400,
                    message: "bad request".into(),
                });
            }
            if prompt.contains("<chunk> badw0") {
                return Ok("Sure! Here are some questions.".into());
            }
            StubChat::default().complete(prompt)
        }
    }

    #[test]
    fn failures_are_collected_and_run_continues() {
        let passages = [passage("bad", 100), passage("down", 100), passage("good", 100)];
        let build = build_fineweb_benchmark("fw", &passages, &Flaky, &config(), &AuditLog::new()).unwrap();
        assert_eq!(build.filtered_responses, 1);
        assert_eq!(build.failures.len(), 1);
        assert_eq!(build.failures[0].passage_id, "down");
        assert_eq!(build.benchmark.queries.len(), 2);
        assert!(build.benchmark.queries.iter().all(|q| q.id.starts_with("good-")));
        assert_eq!(build.benchmark.corpus.len(), 3);
    }

    struct Counting(AtomicU32);

    impl ChatModel for Counting {
        fn name(&self) -> &str {
            "counting"
        }
        fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            StubChat::default().complete(prompt)
        }
    }

    #[test]
    fn cache_makes_reruns_free() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config();
        cfg.cache_dir = Some(dir.path().to_path_buf());
        let passages = [passage("a", 600)];
        let llm = Counting(AtomicU32::new(0));
        let first = build_fineweb_benchmark("fw", &passages, &llm, &cfg, &AuditLog::new()).unwrap();
        let calls = llm.0.load(Ordering::SeqCst);
        assert_eq!(calls, 1 + 3);
        let second = build_fineweb_benchmark("fw", &passages, &llm, &cfg, &AuditLog::new()).unwrap();
        assert_eq!(llm.0.load(Ordering::SeqCst), calls);
        assert_eq!(first.benchmark, second.benchmark);
    }

    #[test]
    fn tag_counts_count_shared_membership() {
        let passages = [passage("a", 400)];
        let mut cfg = config();
        cfg.chunk_size = 200;
        let build = build_fineweb_benchmark("fw", &passages, &StubChat::default(), &cfg, &AuditLog::new()).unwrap();
        // chunks [0,199] and [200,399] with third = 133
        let counts = build.tag_counts().map(|(_, n)| n);
        assert_eq!(counts, [2, 4, 2]);
    }
}
