use std::collections::{HashMap, HashSet};

use serde_json::Value;

use super::{Benchmark, CorpusError, Passage, PositionedQuery};
use crate::text::sha256_hex;

/// One answerable SQuAD question with its context and answer offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquadTriple {
    pub id: String,
    pub question: String,
    pub passage: String,
    /// Character offset of the first listed answer.
    pub answer_start: usize,
}

/// Result of parsing one SQuAD file.
#[derive(Debug, Clone, Default)]
pub struct SquadParse {
    pub triples: Vec<SquadTriple>,
    /// Questions marked answerable but unusable, as `(json path, reason)`.
    pub skipped: Vec<(String, String)>,
    pub unanswerable: usize,
}

fn schema(path: &str, message: impl Into<String>) -> CorpusError {
    CorpusError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

fn field<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Value, CorpusError> {
    obj.get(key)
        .ok_or_else(|| schema(&format!("{path}.{key}"), "missing field"))
}

fn array<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Vec<Value>, CorpusError> {
    field(obj, key, path)?
        .as_array()
        .ok_or_else(|| schema(&format!("{path}.{key}"), "expected an array"))
}

fn string<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a str, CorpusError> {
    field(obj, key, path)?
        .as_str()
        .ok_or_else(|| schema(&format!("{path}.{key}"), "expected a string"))
}

/// Parses a SQuAD v2 JSON document into answerable triples.
///
/// Questions flagged `is_impossible` are dropped. An answerable question
/// without answers, or whose offset falls outside its context, is skipped and
/// reported in [`SquadParse::skipped`]; structural problems are errors.
pub fn parse_squad(raw_json: &[u8]) -> Result<SquadParse, CorpusError> {
    let root: Value = serde_json::from_slice(raw_json)?;
    let mut out = SquadParse::default();
    for (a, article) in array(&root, "data", "$")?.iter().enumerate() {
        let apath = format!("$.data[{a}]");
        for (p, paragraph) in array(article, "paragraphs", &apath)?.iter().enumerate() {
            let ppath = format!("{apath}.paragraphs[{p}]");
            let context = string(paragraph, "context", &ppath)?;
            let context_chars = context.chars().count();
            for (q, qa) in array(paragraph, "qas", &ppath)?.iter().enumerate() {
                let qpath = format!("{ppath}.qas[{q}]");
                let impossible = match qa.get("is_impossible") {
                    None | Some(Value::Null) => false,
                    Some(Value::Bool(b)) => *b,
                    Some(_) => return Err(schema(&format!("{qpath}.is_impossible"), "expected a boolean")),
                };
                if impossible {
                    out.unanswerable += 1;
                    continue;
                }
                let question = string(qa, "question", &qpath)?;
                let id = match qa.get("id") {
                    Some(Value::String(s)) if !s.is_empty() => s.clone(),
                    _ => format!("squad-{a}-{p}-{q}"),
                };
                let answers = array(qa, "answers", &qpath)?;
                let Some(first) = answers.first() else {
                    out.skipped.push((qpath, "answerable question has no answers".into()));
                    continue;
                };
                let start_path = format!("{qpath}.answers[0].answer_start");
                let start = field(first, "answer_start", &format!("{qpath}.answers[0]"))?
                    .as_u64()
                    .ok_or_else(|| schema(&start_path, "expected a non-negative integer"))?
                    as usize;
                if start >= context_chars {
                    out.skipped.push((
                        start_path,
                        format!("answer_start {start} beyond context length {context_chars}"),
                    ));
                    continue;
                }
                out.triples.push(SquadTriple {
                    id,
                    question: question.to_string(),
                    passage: context.to_string(),
                    answer_start: start,
                });
            }
        }
    }
    Ok(out)
}

fn passage_id(text: &str) -> String {
    format!("p{}", &sha256_hex(text.as_bytes())[..16])
}

/// Collapses exact-duplicate passage texts into one corpus entry.
///
/// Passage ids are derived from the text hash, so rebuilding from the same
/// triples in any file order yields the same ids. Corpus order is first
/// appearance; queries keep input order.
pub fn dedupe_passages(name: &str, triples: &[SquadTriple]) -> Benchmark {
    let mut by_text: HashMap<&str, String> = HashMap::new();
    let mut taken_ids: HashSet<String> = HashSet::new();
    let mut corpus = Vec::new();
    let mut query_ids: HashSet<String> = HashSet::with_capacity(triples.len());
    let mut queries = Vec::with_capacity(triples.len());

    for t in triples {
        let pid = match by_text.get(t.passage.as_str()) {
            Some(id) => id.clone(),
            None => {
                let mut id = passage_id(&t.passage);
                // distinct texts sharing a 64-bit prefix
                if taken_ids.contains(&id) {
                    id = format!("p{}", sha256_hex(t.passage.as_bytes()));
                }
                taken_ids.insert(id.clone());
                by_text.insert(t.passage.as_str(), id.clone());
                corpus.push(Passage::new(id.clone(), t.passage.clone()));
                id
            }
        };
        let mut qid = t.id.clone();
        let mut n = 1;
        while query_ids.contains(&qid) {
            n += 1;
            qid = format!("{}-{n}", t.id);
        }
        query_ids.insert(qid.clone());
        queries.push(PositionedQuery {
            id: qid,
            text: t.question.clone(),
            answer_start: Some(t.answer_start),
            segment_tags: None,
            relevant_passage_ids: vec![pid],
        });
    }

    Benchmark {
        name: name.to_string(),
        corpus,
        queries,
        bin_scheme: None,
    }
}
