//! Benchmark construction from span-annotated QA data.
//!
//! A [`Benchmark`] is a retrieval corpus plus queries, each query linking to
//! the passage that contains its evidence and carrying positional metadata:
//! either the character offset of its answer (`answer_start`, bucketed by a
//! [`BinScheme`]) or the passage thirds its source chunk falls in
//! (`segment_tags`).

mod bins;
mod bundle;
mod chunk;
mod sample;
mod squad;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::word_count;

pub use bins::{assign_bin, histogram_answer_starts, BinScheme, DEFAULT_BIN_EDGES};
pub use bundle::{
    read_bundle, read_passages_jsonl, write_bundle, BUNDLE_BINS, BUNDLE_CORPUS,
    BUNDLE_QRELS, BUNDLE_QUERIES,
};
pub use chunk::{chunk_words, TextChunk};
pub use sample::{filter_by_length, sample_tiny};
pub use squad::{dedupe_passages, parse_squad, SquadParse, SquadTriple};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed SQuAD JSON at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("offset {offset} is outside the bin range [0, {max}]")]
    OffsetOutOfRange { offset: usize, max: usize },
    #[error("invalid bin scheme: {0}")]
    InvalidBinScheme(String),
    #[error("requested {requested} queries but the benchmark has {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("benchmark queries carry no answer offsets (query {0})")]
    NotOffsetBenchmark(String),
    #[error("invalid benchmark: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
}

impl CorpusError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// One retrievable unit of the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawPassage")]
pub struct Passage {
    pub id: String,
    pub text: String,
    #[serde(skip)]
    pub word_count: usize,
}

#[derive(Deserialize)]
struct RawPassage {
    id: String,
    text: String,
}

impl From<RawPassage> for Passage {
    fn from(raw: RawPassage) -> Self {
        Passage::new(raw.id, raw.text)
    }
}

impl Passage {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let word_count = word_count(&text);
        Self {
            id: id.into(),
            text,
            word_count,
        }
    }
}

/// Which third of a passage a generated question's source chunk touches.
///
/// `before`/`after` are accepted as synonyms of `beginning`/`end` when
/// reading files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentTag {
    #[serde(alias = "before", alias = "begin")]
    Beginning,
    Middle,
    #[serde(alias = "after")]
    End,
}

impl SegmentTag {
    pub const ALL: [SegmentTag; 3] = [SegmentTag::Beginning, SegmentTag::Middle, SegmentTag::End];

    pub fn as_str(self) -> &'static str {
        match self {
            SegmentTag::Beginning => "beginning",
            SegmentTag::Middle => "middle",
            SegmentTag::End => "end",
        }
    }
}

impl fmt::Display for SegmentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionedQuery {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_tags: Option<Vec<SegmentTag>>,
    pub relevant_passage_ids: Vec<String>,
}

/// Corpus, queries and position grouping: the self-contained evaluation unit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Benchmark {
    pub name: String,
    pub corpus: Vec<Passage>,
    pub queries: Vec<PositionedQuery>,
    pub bin_scheme: Option<BinScheme>,
}

impl Benchmark {
    pub fn passage(&self, id: &str) -> Option<&Passage> {
        self.corpus.iter().find(|p| p.id == id)
    }

    /// Checks id uniqueness, relevance links and the positional-metadata rules.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut passage_ids = HashSet::with_capacity(self.corpus.len());
        let mut lengths = std::collections::HashMap::with_capacity(self.corpus.len());
        for p in &self.corpus {
            if p.text.is_empty() {
                return Err(CorpusError::Invalid(format!("passage {} has empty text", p.id)));
            }
            if !passage_ids.insert(p.id.as_str()) {
                return Err(CorpusError::Invalid(format!("duplicate passage id {}", p.id)));
            }
            lengths.insert(p.id.as_str(), p.text.chars().count());
        }
        let mut query_ids = HashSet::with_capacity(self.queries.len());
        let mut has_offsets = None;
        for q in &self.queries {
            if !query_ids.insert(q.id.as_str()) {
                return Err(CorpusError::Invalid(format!("duplicate query id {}", q.id)));
            }
            if q.relevant_passage_ids.is_empty() {
                return Err(CorpusError::Invalid(format!("query {} has no relevant passage", q.id)));
            }
            for pid in &q.relevant_passage_ids {
                let Some(&len) = lengths.get(pid.as_str()) else {
                    return Err(CorpusError::Invalid(format!(
                        "query {} links to unknown passage {pid}",
                        q.id
                    )));
                };
                if let Some(start) = q.answer_start {
                    if start >= len {
                        return Err(CorpusError::Invalid(format!(
                            "query {} answer_start {start} exceeds passage length {len}",
                            q.id
                        )));
                    }
                }
            }
            match (&q.answer_start, &q.segment_tags) {
                (Some(_), None) => {}
                (None, Some(tags)) if !tags.is_empty() => {}
                _ => {
                    return Err(CorpusError::Invalid(format!(
                        "query {} must carry exactly one of answer_start / segment_tags",
                        q.id
                    )))
                }
            }
            let offsets = q.answer_start.is_some();
            if *has_offsets.get_or_insert(offsets) != offsets {
                return Err(CorpusError::Invalid(
                    "benchmark mixes offset-binned and segment-tagged queries".into(),
                ));
            }
        }
        Ok(())
    }
}
