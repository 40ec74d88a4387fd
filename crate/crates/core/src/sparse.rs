//! Okapi BM25 over an in-memory inverted index.
//!
//! ```text
//! score(q, d) = Σ_t idf(t) · tf·(k1 + 1) / (tf + k1·(1 − b + b·|d|/avgdl))
//! idf(t)      = ln(1 + (N − n_t + 0.5) / (n_t + 0.5))
//! ```
//!
//! Query terms are summed in sorted order so that a document's score does not
//! depend on query word order or on which code path computed it.

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::Passage;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("duplicate passage id {0}")]
    DuplicateId(String),
    #[error("unknown passage id {0}")]
    UnknownPassage(String),
    #[error("invalid BM25 parameters: {0}")]
    InvalidParams(String),
    #[error("index file {path}: {message}")]
    Persist { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self, SparseError> {
        if !(k1 >= 0.0) || !(0.0..=1.0).contains(&b) {
            return Err(SparseError::InvalidParams(format!("k1={k1}, b={b}")));
        }
        Ok(Self { k1, b })
    }
}

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Immutable after construction; safe to search from many threads.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    /// Passage ids in ascending order; a document's index is its position.
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    postings: HashMap<String, Vec<Posting>>,
}

impl InvertedIndex {
    pub fn build(corpus: &[Passage]) -> Result<Self, SparseError> {
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        order.sort_by(|&a, &b| corpus[a].id.cmp(&corpus[b].id));
        if let Some(w) = order.windows(2).find(|w| corpus[w[0]].id == corpus[w[1]].id) {
            return Err(SparseError::DuplicateId(corpus[w[0]].id.clone()));
        }

        let tokenized: Vec<Vec<String>> = order.par_iter().map(|&i| tokenize(&corpus[i].text)).collect();
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(corpus.len());
        for (doc, tokens) in tokenized.iter().enumerate() {
            doc_lengths.push(tokens.len() as u32);
            let mut tf: HashMap<&str, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t.as_str()).or_insert(0) += 1;
            }
            for (term, count) in tf {
                postings.entry(term.to_string()).or_default().push(Posting {
                    doc: doc as u32,
                    tf: count,
                });
            }
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = if doc_lengths.is_empty() {
            0.0
        } else {
            total as f64 / doc_lengths.len() as f64
        };
        Ok(Self {
            doc_ids: order.iter().map(|&i| corpus[i].id.clone()).collect(),
            doc_lengths,
            avg_doc_length,
            postings,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, passage_id: &str) -> Option<u32> {
        self.doc_index(passage_id).map(|i| self.doc_lengths[i])
    }

    /// `(passage_id, term frequency)` pairs for `term`, ordered by passage id.
    pub fn postings(&self, term: &str) -> Vec<(&str, u32)> {
        self.postings
            .get(term)
            .map(|ps| ps.iter().map(|p| (self.doc_ids[p.doc as usize].as_str(), p.tf)).collect())
            .unwrap_or_default()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    fn doc_index(&self, passage_id: &str) -> Option<usize> {
        self.doc_ids.binary_search_by(|id| id.as_str().cmp(passage_id)).ok()
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.postings.get(term).map_or(0, Vec::len) as f64;
        let n = self.doc_count() as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    #[inline]
    fn term_weight(&self, idf: f64, tf: u32, doc_len: u32, params: &Bm25Params) -> f64 {
        let tf = f64::from(tf);
        let norm = if self.avg_doc_length > 0.0 {
            1.0 - params.b + params.b * f64::from(doc_len) / self.avg_doc_length
        } else {
            1.0
        };
        idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
    }

    /// BM25 score of one passage for already-tokenized query terms.
    pub fn score(&self, query_terms: &[String], passage_id: &str, params: &Bm25Params) -> Result<f64, SparseError> {
        let doc = self
            .doc_index(passage_id)
            .ok_or_else(|| SparseError::UnknownPassage(passage_id.to_string()))? as u32;
        let mut terms: Vec<&str> = query_terms.iter().map(String::as_str).collect();
        terms.sort_unstable();
        let mut score = 0.0;
        for term in terms {
            let Some(list) = self.postings.get(term) else { continue };
            if let Ok(pos) = list.binary_search_by_key(&doc, |p| p.doc) {
                score += self.term_weight(self.idf(term), list[pos].tf, self.doc_lengths[doc as usize], params);
            }
        }
        Ok(score)
    }

    /// Top-`k` passages by descending score, ties by ascending passage id.
    /// Passages sharing no term with the query are not returned.
    pub fn search(&self, query: &str, params: &Bm25Params, k: usize) -> Vec<(String, f64)> {
        let mut terms = tokenize(query);
        terms.sort_unstable();
        let mut acc = vec![0.0f64; self.doc_count()];
        let mut touched = vec![false; self.doc_count()];
        let mut hits: Vec<u32> = Vec::new();
        for term in &terms {
            let Some(list) = self.postings.get(term) else { continue };
            let idf = self.idf(term);
            for p in list {
                let d = p.doc as usize;
                acc[d] += self.term_weight(idf, p.tf, self.doc_lengths[d], params);
                if !touched[d] {
                    touched[d] = true;
                    hits.push(p.doc);
                }
            }
        }
        // doc index order is passage id order, so index breaks ties
        hits.sort_unstable_by(|&a, &b| acc[b as usize].total_cmp(&acc[a as usize]).then(a.cmp(&b)));
        hits.truncate(k);
        hits.into_iter()
            .map(|d| (self.doc_ids[d as usize].clone(), acc[d as usize]))
            .collect()
    }

    /// [`search`](Self::search) for many queries in parallel; output order
    /// follows input order.
    pub fn search_many(&self, queries: &[&str], params: &Bm25Params, k: usize) -> Vec<Vec<(String, f64)>> {
        queries.par_iter().map(|q| self.search(q, params, k)).collect()
    }
}

pub fn build_index(corpus: &[Passage]) -> Result<InvertedIndex, SparseError> {
    InvertedIndex::build(corpus)
}

pub fn bm25_score(
    query_terms: &[String],
    passage_id: &str,
    index: &InvertedIndex,
    params: &Bm25Params,
) -> Result<f64, SparseError> {
    index.score(query_terms, passage_id, params)
}

pub fn search(query: &str, index: &InvertedIndex, params: &Bm25Params, k: usize) -> Vec<(String, f64)> {
    index.search(query, params, k)
}

const INDEX_MAGIC: &[u8; 8] = b"MYOPBM25";
const INDEX_VERSION: u32 = 1;

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }
    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }
    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
    fn string(&mut self) -> Option<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).ok()
    }
}

impl InvertedIndex {
    /// Little-endian binary image: magic, format version, documents, then
    /// terms in sorted order with their postings.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(INDEX_MAGIC);
        buf.extend_from_slice(&INDEX_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.doc_ids.len() as u64).to_le_bytes());
        for (id, len) in self.doc_ids.iter().zip(&self.doc_lengths) {
            put_str(&mut buf, id);
            buf.extend_from_slice(&len.to_le_bytes());
        }
        buf.extend_from_slice(&self.avg_doc_length.to_bits().to_le_bytes());
        let mut terms: Vec<&String> = self.postings.keys().collect();
        terms.sort_unstable();
        buf.extend_from_slice(&(terms.len() as u64).to_le_bytes());
        for term in terms {
            put_str(&mut buf, term);
            let list = &self.postings[term];
            buf.extend_from_slice(&(list.len() as u32).to_le_bytes());
            for p in list {
                buf.extend_from_slice(&p.doc.to_le_bytes());
                buf.extend_from_slice(&p.tf.to_le_bytes());
            }
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, String> {
        let mut c = Cursor { bytes, pos: 0 };
        if c.take(8) != Some(&INDEX_MAGIC[..]) {
            return Err("bad magic".into());
        }
        let version = c.u32().ok_or("truncated header")?;
        if version != INDEX_VERSION {
            return Err(format!("unsupported format version {version}"));
        }
        let truncated = || "truncated index".to_string();
        let docs = c.u64().ok_or_else(truncated)? as usize;
        let mut doc_ids = Vec::with_capacity(docs);
        let mut doc_lengths = Vec::with_capacity(docs);
        for _ in 0..docs {
            doc_ids.push(c.string().ok_or_else(truncated)?);
            doc_lengths.push(c.u32().ok_or_else(truncated)?);
        }
        let avg_doc_length = f64::from_bits(c.u64().ok_or_else(truncated)?);
        let terms = c.u64().ok_or_else(truncated)? as usize;
        let mut postings = HashMap::with_capacity(terms);
        for _ in 0..terms {
            let term = c.string().ok_or_else(truncated)?;
            let n = c.u32().ok_or_else(truncated)? as usize;
            let mut list = Vec::with_capacity(n);
            for _ in 0..n {
                let doc = c.u32().ok_or_else(truncated)?;
                let tf = c.u32().ok_or_else(truncated)?;
                if doc as usize >= docs {
                    return Err(format!("posting for {term} points past the document table"));
                }
                list.push(Posting { doc, tf });
            }
            postings.insert(term, list);
        }
        if c.pos != bytes.len() {
            return Err("trailing bytes".into());
        }
        Ok(Self {
            doc_ids,
            doc_lengths,
            avg_doc_length,
            postings,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), SparseError> {
        let err = |e: std::io::Error| SparseError::Persist {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut f = fs::File::create(path).map_err(err)?;
        f.write_all(&self.to_bytes()).map_err(err)
    }

    pub fn load(path: &Path) -> Result<Self, SparseError> {
        let mut bytes = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| SparseError::Persist {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        Self::from_bytes(&bytes).map_err(|message| SparseError::Persist {
            path: path.display().to_string(),
            message,
        })
    }
}
