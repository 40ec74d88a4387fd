//! Word-budgeted recursive splitting.
//!
//! Boundaries between consecutive words are ranked by the whitespace (and
//! punctuation) around them: blank line, line break, sentence end, plain
//! space. A span longer than the budget is cut at every boundary of the
//! strongest rank it contains; the pieces are then greedily re-merged up to
//! the budget, and any piece still over budget is split again with the next
//! rank down.

use crate::posgen::ChunkSpan;
use crate::text::word_spans;

/// A chunk of source text and its word span within the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextChunk {
    pub span: ChunkSpan,
    pub text: String,
}

const PARAGRAPH: u8 = 0;
const LINE: u8 = 1;
const SENTENCE: u8 = 2;
const SPACE: u8 = 3;

fn ends_sentence(word: &str) -> bool {
    let trimmed = word.trim_end_matches(['"', '\'', ')', ']', '”', '’']);
    trimmed.ends_with(['.', '!', '?'])
}

fn boundary_rank(gap: &str, previous_word: &str) -> u8 {
    match gap.matches('\n').count() {
        0 if ends_sentence(previous_word) => SENTENCE,
        0 => SPACE,
        1 => LINE,
        _ => PARAGRAPH,
    }
}

fn split_range(ranks: &[u8], start: usize, end: usize, budget: usize, out: &mut Vec<(usize, usize)>) {
    if end - start <= budget {
        out.push((start, end));
        return;
    }
    // ranks[i] is the boundary between word i and word i + 1
    let strongest = ranks[start..end - 1].iter().copied().min().unwrap_or(SPACE);
    let mut pieces = Vec::new();
    let mut piece_start = start;
    for i in start..end - 1 {
        if ranks[i] == strongest {
            pieces.push((piece_start, i + 1));
            piece_start = i + 1;
        }
    }
    pieces.push((piece_start, end));

    let mut current: Option<(usize, usize)> = None;
    for (s, e) in pieces {
        if e - s > budget {
            if let Some(c) = current.take() {
                out.push(c);
            }
            split_range(ranks, s, e, budget, out);
            continue;
        }
        current = match current {
            Some((cs, _)) if e - cs <= budget => Some((cs, e)),
            Some(c) => {
                out.push(c);
                Some((s, e))
            }
            None => Some((s, e)),
        };
    }
    if let Some(c) = current {
        out.push(c);
    }
}

/// Splits `text` into in-order, non-overlapping chunks of at most
/// `chunk_size` words that together cover every word.
///
/// Chunk text is the source slice from the first to the last word of the
/// chunk, so interior whitespace is preserved.
pub fn chunk_words(text: &str, chunk_size: usize) -> Vec<TextChunk> {
    assert!(chunk_size >= 1, "chunk_size must be at least 1");
    let spans = word_spans(text);
    let total = spans.len();
    if total == 0 {
        return Vec::new();
    }
    let ranks: Vec<u8> = spans
        .windows(2)
        .map(|w| boundary_rank(&text[w[0].1..w[1].0], &text[w[0].0..w[0].1]))
        .collect();

    let mut ranges = Vec::new();
    split_range(&ranks, 0, total, chunk_size, &mut ranges);
    ranges
        .into_iter()
        .map(|(s, e)| TextChunk {
            span: ChunkSpan {
                total_words: total,
                start_word: s,
                end_word: e - 1,
            },
            text: text[spans[s].0..spans[e - 1].1].to_string(),
        })
        .collect()
}
