//! Deterministic hash-based embedders with controllable position bias.
//!
//! Every token maps to a pseudo-random unit vector: the token's 64-bit
//! FNV-1a hash, mixed with the embedder seed, seeds a ChaCha8 generator that
//! draws the components. A dense text vector is the weighted mean of its
//! token vectors, L2-normalised, where the weight of the token at position
//! `i` depends on the mode:
//!
//! | mode              | weight         |
//! |-------------------|----------------|
//! | `uniform_average` | 1              |
//! | `position_decay`  | `exp(-λ·i)`    |
//! | `first_k`         | 1 if `i < k`, else 0 |

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingKind, EmbeddingRecord, Embedder, ProviderError, TextItem};
use crate::sparse::tokenize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticMode {
    UniformAverage,
    PositionDecay { lambda: f64 },
    FirstK { k: usize },
}

impl SyntheticMode {
    pub fn validate(&self) -> Result<(), ProviderError> {
        match *self {
            SyntheticMode::PositionDecay { lambda } if !(lambda >= 0.0) => Err(ProviderError::Config(
                format!("position_decay needs lambda >= 0, got {lambda}"),
            )),
            SyntheticMode::FirstK { k: 0 } => {
                Err(ProviderError::Config("first_k needs k >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    fn weight(&self, position: usize) -> f64 {
        match *self {
            SyntheticMode::UniformAverage => 1.0,
            SyntheticMode::PositionDecay { lambda } => (-lambda * position as f64).exp(),
            SyntheticMode::FirstK { k } => {
                if position < k {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for SyntheticMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntheticMode::UniformAverage => write!(f, "uniform_average"),
            SyntheticMode::PositionDecay { lambda } => write!(f, "position_decay:{lambda}"),
            SyntheticMode::FirstK { k } => write!(f, "first_k:{k}"),
        }
    }
}

impl FromStr for SyntheticMode {
    type Err = ProviderError;

    /// Parses `uniform_average`, `position_decay:<λ>` or `first_k:<k>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let bad = || ProviderError::Config(format!("unrecognised synthetic mode {s:?}"));
        let mode = match (name, arg) {
            ("uniform_average", None) => SyntheticMode::UniformAverage,
            ("position_decay", Some(a)) => SyntheticMode::PositionDecay {
                lambda: a.parse().map_err(|_| bad())?,
            },
            ("first_k", Some(a)) => SyntheticMode::FirstK {
                k: a.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        mode.validate()?;
        Ok(mode)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone)]
pub struct SyntheticEmbedder {
    mode: SyntheticMode,
    dim: usize,
    seed: u64,
    kind: EmbeddingKind,
}

impl SyntheticEmbedder {
    pub fn new(mode: SyntheticMode, dim: usize, seed: u64) -> Result<Self, ProviderError> {
        mode.validate()?;
        if dim == 0 {
            return Err(ProviderError::Config("dim must be at least 1".into()));
        }
        Ok(Self {
            mode,
            dim,
            seed,
            kind: EmbeddingKind::Dense,
        })
    }

    /// Token-level variant: one row per token (only the first `k` under
    /// `first_k`), for late-interaction scoring.
    pub fn multivector(mut self) -> Self {
        self.kind = EmbeddingKind::Multivector;
        self
    }

    pub fn mode(&self) -> SyntheticMode {
        self.mode
    }

    /// Unit vector for one token.
    pub fn token_vector(&self, token: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a64(token.as_bytes()) ^ self.seed);
        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
        v
    }

    /// Embeds a single text.
    pub fn embed_text(&self, id: &str, text: &str) -> Result<EmbeddingRecord, ProviderError> {
        let mut memo: HashMap<String, Vec<f64>> = HashMap::new();
        self.embed_with_memo(id, text, &mut memo)
    }

    fn embed_with_memo(
        &self,
        id: &str,
        text: &str,
        memo: &mut HashMap<String, Vec<f64>>,
    ) -> Result<EmbeddingRecord, ProviderError> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(ProviderError::InvalidResponse(format!("{id}: text has no tokens")));
        }
        let mut vector_of = |t: &String| -> Vec<f64> {
            memo.entry(t.clone()).or_insert_with(|| self.token_vector(t)).clone()
        };
        let to_f32 = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();

        let rows: Vec<Vec<f32>> = match self.kind {
            EmbeddingKind::Multivector => {
                let keep = match self.mode {
                    SyntheticMode::FirstK { k } => k.min(tokens.len()),
                    _ => tokens.len(),
                };
                tokens[..keep].iter().map(|t| to_f32(&vector_of(t))).collect()
            }
            EmbeddingKind::Dense => {
                let mut acc = vec![0.0f64; self.dim];
                let mut total = 0.0;
                for (i, t) in tokens.iter().enumerate() {
                    let w = self.mode.weight(i);
                    if w == 0.0 {
                        continue;
                    }
                    total += w;
                    for (a, x) in acc.iter_mut().zip(vector_of(t)) {
                        *a += w * x;
                    }
                }
                let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
                if total == 0.0 || norm == 0.0 {
                    return Err(ProviderError::InvalidResponse(format!("{id}: degenerate text vector")));
                }
                vec![acc.iter().map(|x| (x / norm) as f32).collect()]
            }
        };
        let mut record = EmbeddingRecord::from_rows(id, self.kind, &rows)?;
        record.normalized = true;
        Ok(record)
    }
}

impl Embedder for SyntheticEmbedder {
    fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    fn embed(&self, items: &[TextItem]) -> Result<Vec<EmbeddingRecord>, ProviderError> {
        if items.is_empty() {
            return Err(ProviderError::EmptyInput);
        }
        let mut memo = HashMap::new();
        items
            .iter()
            .map(|it| self.embed_with_memo(&it.id, &it.text, &mut memo))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f32], b: &[f32]) -> f64 {
        a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
    }

    fn embed(mode: SyntheticMode, text: &str) -> Vec<f32> {
        SyntheticEmbedder::new(mode, 32, 7)
            .unwrap()
            .embed_text("x", text)
            .unwrap()
            .data
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn single_token_text_is_the_token_vector() {
        let e = SyntheticEmbedder::new(SyntheticMode::UniformAverage, 16, 3).unwrap();
        let rec = e.embed_text("a", "Word").unwrap();
        let tok: Vec<f32> = e.token_vector("word").iter().map(|&x| x as f32).collect();
        assert_eq!(rec.data, tok);
        assert!(rec.rows_are_unit(1e-6));
    }

    #[test]
    fn tiny_decay_approaches_uniform() {
        let text = "the quick brown fox jumps over the lazy dog again and again";
        let uniform = embed(SyntheticMode::UniformAverage, text);
        let decayed = embed(SyntheticMode::PositionDecay { lambda: 1e-9 }, text);
        assert!(dot(&uniform, &decayed) > 1.0 - 1e-6);
        let strong = embed(SyntheticMode::PositionDecay { lambda: 1.0 }, text);
        assert!(dot(&uniform, &strong) < 0.99);
    }

    #[test]
    fn first_k_ignores_the_suffix() {
        let m = SyntheticMode::FirstK { k: 2 };
        assert_eq!(embed(m, "a b c d"), embed(m, "a b"));
        assert_eq!(embed(m, "a b c d"), embed(m, "a b x y"));
        assert_ne!(embed(m, "a b"), embed(m, "a c"));
        // under uniform weighting the suffix matters
        let u = SyntheticMode::UniformAverage;
        assert_ne!(embed(u, "a b c d"), embed(u, "a b x y"));
    }

    #[test]
    fn weighting_matches_direct_mean() {
        // brute-force weighted mean of token vectors
        let e = SyntheticEmbedder::new(SyntheticMode::PositionDecay { lambda: 0.3 }, 8, 11).unwrap();
        let tokens = ["alpha", "beta", "gamma", "beta"];
        let mut acc = [0.0f64; 8];
        for (i, t) in tokens.iter().enumerate() {
            let w = (-0.3 * i as f64).exp();
            for (a, x) in acc.iter_mut().zip(e.token_vector(t)) {
                *a += w * x;
            }
        }
        let n = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        let want: Vec<f32> = acc.iter().map(|x| (x / n) as f32).collect();
        assert_eq!(e.embed_text("x", "alpha beta gamma beta").unwrap().data, want);
    }

    #[test]
    fn modes_parse_and_validate() {
        assert_eq!("uniform_average".parse::<SyntheticMode>().unwrap(), SyntheticMode::UniformAverage);
        assert_eq!(
            "position_decay:0.05".parse::<SyntheticMode>().unwrap(),
            SyntheticMode::PositionDecay { lambda: 0.05 }
        );
        assert_eq!("first_k:3".parse::<SyntheticMode>().unwrap(), SyntheticMode::FirstK { k: 3 });
        assert!("position_decay:-1".parse::<SyntheticMode>().is_err());
        assert!("first_k:0".parse::<SyntheticMode>().is_err());
        assert!("nope".parse::<SyntheticMode>().is_err());
        assert!(SyntheticEmbedder::new(SyntheticMode::PositionDecay { lambda: -0.1 }, 4, 0).is_err());
    }

    #[test]
    fn multivector_rows_are_token_vectors() {
        let e = SyntheticEmbedder::new(SyntheticMode::FirstK { k: 2 }, 8, 1).unwrap().multivector();
        let rec = e.embed_text("x", "one two three").unwrap();
        assert_eq!(rec.rows(), 2);
        assert_eq!(rec.kind, EmbeddingKind::Multivector);
    }

    #[test]
    fn empty_text_is_rejected() {
        let e = SyntheticEmbedder::new(SyntheticMode::UniformAverage, 8, 1).unwrap();
        assert!(e.embed_text("x", " ,. ").is_err());
    }
}
