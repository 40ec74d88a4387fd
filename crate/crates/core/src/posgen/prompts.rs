use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChunkSpan, GeneratedQA, PosgenError, QuestionType};
use crate::corpus::TextChunk;
use crate::providers::{with_retries, ChatModel, ProviderError, RetryPolicy};
use crate::text::{sha256_hex, word_count};

/// The summary length the summarization prompt asks for. Longer summaries
/// are kept and flagged.
pub const SUMMARY_WORD_LIMIT: usize = 400;

const SUMMARIZE_BODY: &str = "<Task>
Given a document, please paraphrase it concisely.
</Task>

<Requirements>
- The paraphrase should be concise but not missing any key information.
- Please decide the number of words for the paraphrase based on the length and content of the document, but do not exceed 400 words.
- You MUST only output the paraphrase, and do not output anything else.
</Requirements>

<Document> {TEXT} </Document>";

const GENERATE_QA_BODY: &str = r#"<Task>
Given a summary and a chunk of document, please brainstorm some FAQs for this chunk.
</Task>

<Requirements>
- The generated questions should be high-frequency and commonly asked by people.
- Two types of questions should be generated: simple (e.g., factual questions) and complicated (questions that require reasoning and deep thinking to answer).
- The majority of the questions you generate should be complicated.
- The answers to the questions must be based on the chunk and should not be fabricated.
- You MUST only output the FAQs, and do not output anything else.
Note: The FAQ you generate must be based on this chunk rather than the summary!!! The summary is only used to assist you in understanding the chunk.
</Requirements>

<summary> {SUMMARY} </summary>

<chunk> {CHUNK} </chunk>

<Output Format>
Your output should be a JSON List:
[
  {
    "question": "Genrated question",
    "answer": "The answer of question",
    "type": "simple or complicated"
  },
  ...
]
</Output Format>"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    Summarize,
    GenerateQa,
}

impl TemplateName {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::Summarize => "summarize",
            TemplateName::GenerateQa => "generate_qa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: TemplateName,
    pub body: String,
}

impl PromptTemplate {
    /// Summarization prompt; placeholder `{TEXT}`.
    pub fn summarize() -> Self {
        Self {
            name: TemplateName::Summarize,
            body: SUMMARIZE_BODY.to_string(),
        }
    }

    /// Question generation prompt; placeholders `{SUMMARY}` and `{CHUNK}`.
    pub fn generate_qa() -> Self {
        Self {
            name: TemplateName::GenerateQa,
            body: GENERATE_QA_BODY.to_string(),
        }
    }

    pub fn placeholders(&self) -> &'static [&'static str] {
        match self.name {
            TemplateName::Summarize => &["TEXT"],
            TemplateName::GenerateQa => &["SUMMARY", "CHUNK"],
        }
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.body.as_bytes())
    }

    /// Substitutes placeholders in one left-to-right pass, so text that
    /// itself contains `{CHUNK}` or similar is inserted literally.
    pub fn render(&self, vars: &[(&str, &str)]) -> String {
        let mut out = String::with_capacity(self.body.len() + vars.iter().map(|(_, v)| v.len()).sum::<usize>());
        let mut rest = self.body.as_str();
        'scan: while let Some(pos) = rest.find('{') {
            out.push_str(&rest[..pos]);
            rest = &rest[pos..];
            for (key, value) in vars {
                let token_len = key.len() + 2;
                if rest.len() >= token_len && rest[1..].starts_with(key) && rest.as_bytes()[token_len - 1] == b'}' {
                    out.push_str(value);
                    rest = &rest[token_len..];
                    continue 'scan;
                }
            }
            out.push('{');
            rest = &rest[1..];
        }
        out.push_str(rest);
        out
    }
}

/// One provider exchange, written as a JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub passage_id: String,
    pub stage: String,
    pub prompt_hash: String,
    pub response: String,
    pub valid: bool,
    #[serde(default)]
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Thread-safe collector of [`AuditRecord`]s.
#[derive(Debug, Default)]
pub struct AuditLog {
    records: Mutex<Vec<AuditRecord>>,
}

impl AuditLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, record: AuditRecord) {
        self.records.lock().unwrap().push(record);
    }

    /// Records sorted by passage id, then stage, then prompt hash.
    pub fn snapshot(&self) -> Vec<AuditRecord> {
        let mut out = self.records.lock().unwrap().clone();
        out.sort_by(|a, b| {
            (&a.passage_id, &a.stage, &a.prompt_hash).cmp(&(&b.passage_id, &b.stage, &b.prompt_hash))
        });
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), PosgenError> {
        let io = |e: std::io::Error| PosgenError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        for r in self.snapshot() {
            serde_json::to_writer(&mut w, &r).map_err(|e| io(e.into()))?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub text: String,
    pub attempts: u32,
    pub over_limit: bool,
}

fn provider_error(stage: &'static str, passage_id: &str, e: ProviderError) -> PosgenError {
    let attempts = match &e {
        ProviderError::Exhausted { attempts, .. } => *attempts,
        _ => 1,
    };
    PosgenError::Provider {
        stage,
        passage_id: passage_id.to_string(),
        attempts,
        source: e,
    }
}

/// Asks the model to summarize a passage and returns its text unchanged.
pub fn summarize(
    passage_id: &str,
    passage_text: &str,
    template: &PromptTemplate,
    llm: &dyn ChatModel,
    policy: &RetryPolicy,
    audit: &AuditLog,
) -> Result<Summary, PosgenError> {
    let prompt = template.render(&[("TEXT", passage_text)]);
    let (text, attempts) =
        with_retries(policy, |_| llm.complete(&prompt)).map_err(|e| provider_error("summarize", passage_id, e))?;
    let valid = !text.trim().is_empty();
    let over_limit = word_count(&text) > SUMMARY_WORD_LIMIT;
    let mut flags = Vec::new();
    if over_limit {
        flags.push(format!("summary exceeds {SUMMARY_WORD_LIMIT} words"));
    }
    audit.record(AuditRecord {
        passage_id: passage_id.to_string(),
        stage: TemplateName::Summarize.as_str().to_string(),
        prompt_hash: sha256_hex(prompt.as_bytes()),
        response: text.clone(),
        valid,
        attempts,
        flags,
    });
    if !valid {
        return Err(PosgenError::EmptySummary(passage_id.to_string()));
    }
    Ok(Summary {
        text,
        attempts,
        over_limit,
    })
}

#[derive(Deserialize)]
struct RawQa {
    question: String,
    answer: String,
    #[serde(rename = "type")]
    question_type: QuestionType,
}

/// Parses a question generation response.
///
/// The response must be a JSON list whose every element has non-empty
/// `question` and `answer` strings and a `type` of `simple` or
/// `complicated`. A single surrounding Markdown code fence is tolerated.
/// Anything else rejects the whole response.
pub fn parse_qa_response(response: &str) -> Option<Vec<(String, String, QuestionType)>> {
    let mut body = response.trim();
    if let Some(inner) = body.strip_prefix("```") {
        let inner = inner.strip_suffix("```")?;
        let newline = inner.find('\n')?;
        let lang = inner[..newline].trim();
        if !(lang.is_empty() || lang.eq_ignore_ascii_case("json")) {
            return None;
        }
        body = inner[newline + 1..].trim();
    }
    let items: Vec<RawQa> = serde_json::from_str(body).ok()?;
    if items.iter().any(|q| q.question.trim().is_empty() || q.answer.trim().is_empty()) {
        return None;
    }
    Some(items.into_iter().map(|q| (q.question, q.answer, q.question_type)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaResponse {
    pub items: Vec<GeneratedQA>,
    /// The response did not match the expected output format.
    pub filtered: bool,
    pub attempts: u32,
}

/// Asks the model for question/answer pairs about one chunk.
pub fn generate_qa(
    passage_id: &str,
    summary: &str,
    chunk: &TextChunk,
    template: &PromptTemplate,
    llm: &dyn ChatModel,
    policy: &RetryPolicy,
    audit: &AuditLog,
) -> Result<QaResponse, PosgenError> {
    let prompt = template.render(&[("SUMMARY", summary), ("CHUNK", &chunk.text)]);
    let (text, attempts) =
        with_retries(policy, |_| llm.complete(&prompt)).map_err(|e| provider_error("generate_qa", passage_id, e))?;
    let parsed = parse_qa_response(&text);
    audit.record(AuditRecord {
        passage_id: passage_id.to_string(),
        stage: TemplateName::GenerateQa.as_str().to_string(),
        prompt_hash: sha256_hex(prompt.as_bytes()),
        response: text,
        valid: parsed.is_some(),
        attempts,
        flags: Vec::new(),
    });
    let span: ChunkSpan = chunk.span;
    Ok(match parsed {
        Some(items) => QaResponse {
            items: items
                .into_iter()
                .map(|(question, answer, question_type)| GeneratedQA {
                    question,
                    answer,
                    question_type,
                    source_chunk: span,
                    passage_id: passage_id.to_string(),
                })
                .collect(),
            filtered: false,
            attempts,
        },
        None => QaResponse {
            items: Vec::new(),
            filtered: true,
            attempts,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};
    use std::time::Duration;

    struct Scripted {
        replies: Mutex<Vec<Result<String, ProviderError>>>,
        calls: AtomicU32,
    }

    impl Scripted {
        fn new(replies: Vec<Result<String, ProviderError>>) -> Self {
            Self {
                replies: Mutex::new(replies.into_iter().rev().collect()),
                calls: AtomicU32::new(0),
            }
        }
        fn always(reply: &str) -> Self {
            Self::new(vec![Ok(reply.to_string())])
        }
    }

    impl ChatModel for Scripted {
        fn name(&self) -> &str {
            "scripted"
        }
        fn complete(&self, _prompt: &str) -> Result<String, ProviderError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let mut r = self.replies.lock().unwrap();
            if r.len() > 1 {
                r.pop().unwrap()
            } else {
                match &r[0] {
                    Ok(s) => Ok(s.clone()),
                    Err(_) => Err(ProviderError::Timeout),
                }
            }
        }
    }

    fn policy() -> RetryPolicy {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::ZERO,
        }
    }

    fn chunk() -> TextChunk {
        TextChunk {
            span: ChunkSpan::new(300, 0, 49).unwrap(),
            text: "some chunk text".into(),
        }
    }

    #[test]
    fn templates_keep_required_lines() {
        let s = PromptTemplate::summarize();
        assert!(s.body.contains("Given a document, please paraphrase it concisely."));
        assert!(s.body.contains("but do not exceed 400 words."));
        assert!(s.body.contains("<Document> {TEXT} </Document>"));
        let q = PromptTemplate::generate_qa();
        assert!(q.body.contains("please brainstorm some FAQs for this chunk."));
        assert!(q.body.contains("The majority of the questions you generate should be complicated."));
        assert!(q.body.contains("The summary is only used to assist you in understanding the chunk."));
        assert!(q.body.contains("\"question\": \"Genrated question\","));
        assert!(q.body.contains("<summary> {SUMMARY} </summary>"));
        assert!(q.body.contains("<chunk> {CHUNK} </chunk>"));
        for t in [s, q] {
            for p in t.placeholders() {
                assert_eq!(t.body.matches(&format!("{{{p}}}")).count(), 1);
            }
        }
    }

    #[test]
    fn render_is_single_pass() {
        let q = PromptTemplate::generate_qa();
        let out = q.render(&[("SUMMARY", "mentions {CHUNK} literally"), ("CHUNK", "body")]);
        assert!(out.contains("<summary> mentions {CHUNK} literally </summary>"));
        assert!(out.contains("<chunk> body </chunk>"));
        assert!(out.contains("  {\n    \"question\""));
    }

    #[test]
    fn summary_passthrough() {
        let audit = AuditLog::new();
        let llm = Scripted::always("SUMMARY");
        let s = summarize("p1", "text", &PromptTemplate::summarize(), &llm, &policy(), &audit).unwrap();
        assert_eq!(s.text, "SUMMARY");
        assert_eq!(s.attempts, 1);
        assert!(audit.snapshot()[0].valid);
    }

    #[test]
    fn summary_retries_are_counted() {
        let audit = AuditLog::new();
        let llm = Scripted::new(vec![Err(ProviderError::Timeout), Err(ProviderError::Timeout), Ok("ok".into())]);
        let s = summarize("p1", "text", &PromptTemplate::summarize(), &llm, &policy(), &audit).unwrap();
        assert_eq!(s.attempts, 3);
        assert_eq!(audit.snapshot()[0].attempts, 3);
    }

    #[test]
    fn long_summary_is_flagged_not_rejected() {
        let audit = AuditLog::new();
        let long = "word ".repeat(450);
        let llm = Scripted::always(&long);
        let s = summarize("p1", "text", &PromptTemplate::summarize(), &llm, &policy(), &audit).unwrap();
        assert!(s.over_limit);
        let rec = &audit.snapshot()[0];
        assert!(rec.valid);
        assert_eq!(rec.flags.len(), 1);
    }

    #[test]
    fn blank_summary_is_an_error() {
        let audit = AuditLog::new();
        let llm = Scripted::always("   ");
        let err = summarize("p1", "text", &PromptTemplate::summarize(), &llm, &policy(), &audit).unwrap_err();
        assert!(matches!(err, PosgenError::EmptySummary(_)));
        assert!(!audit.snapshot()[0].valid);
    }

    #[test]
    fn exhausted_retries_report_attempts() {
        let audit = AuditLog::new();
        let llm = Scripted::new(vec![Err(ProviderError::Timeout)]);
        match summarize("p1", "t", &PromptTemplate::summarize(), &llm, &policy(), &audit) {
            Err(PosgenError::Provider { attempts: 4, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    fn qa(reply: &str) -> QaResponse {
        let audit = AuditLog::new();
        generate_qa("p1", "sum", &chunk(), &PromptTemplate::generate_qa(), &Scripted::always(reply), &policy(), &audit)
            .unwrap()
    }

    #[test]
    fn valid_response_yields_items_with_span() {
        let r = qa(r#"[{"question":"Q","answer":"A","type":"simple"}]"#);
        assert!(!r.filtered);
        assert_eq!(r.items.len(), 1);
        assert_eq!(r.items[0].question_type, QuestionType::Simple);
        assert_eq!(r.items[0].source_chunk, chunk().span);
        assert_eq!(r.items[0].passage_id, "p1");
    }

    #[test]
    fn malformed_responses_are_dropped_whole() {
        assert!(qa("Here are some FAQs: what is it?").filtered);
        let r = qa(r#"[{"question":"Q","answer":"A","type":"simple"},{"question":"Q2","type":"simple"}]"#);
        assert!(r.filtered);
        assert!(r.items.is_empty());
        assert!(qa(r#"[{"question":"Q","answer":"A","type":"hard"}]"#).filtered);
        assert!(qa(r#"[{"question":"","answer":"A","type":"simple"}]"#).filtered);
        assert!(qa(r#"{"question":"Q","answer":"A","type":"simple"}"#).filtered);
    }

    #[test]
    fn code_fence_is_tolerated() {
        let r = qa("```json\n[{\"question\":\"Q\",\"answer\":\"A\",\"type\":\"complicated\"}]\n```");
        assert_eq!(r.items.len(), 1);
        assert!(qa("```python\n[]\n```").filtered);
    }

    #[test]
    fn audit_jsonl_fields() {
        let dir = tempfile::tempdir().unwrap();
        let audit = AuditLog::new();
        let llm = Scripted::always("S");
        summarize("p1", "t", &PromptTemplate::summarize(), &llm, &policy(), &audit).unwrap();
        let path = dir.path().join("audit.jsonl");
        audit.write_jsonl(&path).unwrap();
        let line: serde_json::Value = serde_json::from_str(std::fs::read_to_string(&path).unwrap().trim()).unwrap();
        for key in ["passage_id", "stage", "prompt_hash", "response", "valid"] {
            assert!(line.get(key).is_some(), "{key}");
        }
        assert_eq!(line["stage"], "summarize");
    }
}
