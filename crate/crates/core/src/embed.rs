//! Word-embedding store, phrase pooling, and cosine similarity.
//!
//! The store is deliberately format-agnostic about where vectors came from:
//! any text file of `word v1 … v_dim` rows behind a `vocab_size dim` header
//! loads, and phrase vectors are plain token means.

use std::collections::HashMap;
use std::io::{self, BufRead};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::normalize::Normalizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnkPolicy {
    /// Out-of-vocabulary tokens do not participate in the mean.
    #[default]
    Skip,
    /// Out-of-vocabulary tokens contribute a zero vector.
    Zero,
}

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("missing or malformed header line `vocab_size dim`")]
    BadHeader,
    #[error("row {row}: expected {expected} components, found {found}")]
    DimMismatch { row: usize, expected: usize, found: usize },
    #[error("row {row}: unparseable component {value:?}")]
    BadComponent { row: usize, value: String },
    #[error("vector length {left} != {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    pub unk_policy: UnkPolicy,
    /// Number of duplicate words seen at load time (last occurrence kept).
    pub duplicate_count: usize,
    normalizer: Normalizer,
}

impl EmbeddingStore {
    pub fn load<R: BufRead>(reader: R) -> Result<Self, EmbedError> {
        EmbeddingStore::load_with(reader, Normalizer::new(), UnkPolicy::Skip)
    }

    pub fn load_path(path: &Path) -> Result<Self, EmbedError> {
        let file = std::fs::File::open(path)?;
        EmbeddingStore::load(io::BufReader::new(file))
    }

    pub fn load_with<R: BufRead>(
        reader: R,
        normalizer: Normalizer,
        unk_policy: UnkPolicy,
    ) -> Result<Self, EmbedError> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or(EmbedError::BadHeader)??;
        let mut parts = header.split_whitespace();
        let _vocab: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or(EmbedError::BadHeader)?;
        let dim: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .filter(|d| *d > 0)
            .ok_or(EmbedError::BadHeader)?;

        let mut vectors = HashMap::new();
        let mut duplicate_count = 0;
        for (idx, line) in lines.enumerate() {
            let row = idx + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().ok_or(EmbedError::DimMismatch {
                row,
                expected: dim,
                found: 0,
            })?;
            let mut vector = Vec::with_capacity(dim);
            for field in fields {
                let value: f64 = field.parse().map_err(|_| EmbedError::BadComponent {
                    row,
                    value: field.to_string(),
                })?;
                vector.push(value);
            }
            if vector.len() != dim {
                return Err(EmbedError::DimMismatch {
                    row,
                    expected: dim,
                    found: vector.len(),
                });
            }
            let key = normalizer.normalize_token(word);
            if vectors.insert(key, vector).is_some() {
                duplicate_count += 1;
            }
        }
        Ok(EmbeddingStore {
            dim,
            vectors,
            unk_policy,
            duplicate_count,
            normalizer,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Lookup by normalized token form.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors
            .get(&self.normalizer.normalize_token(word))
            .map(Vec::as_slice)
    }

    /// Mean of the vectors of in-vocabulary normalized tokens. All tokens
    /// out-of-vocabulary yields the zero vector.
    pub fn phrase_vector<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        let mut denom = 0usize;
        for token in tokens {
            match self.get(token.as_ref()) {
                Some(v) => {
                    for (s, x) in sum.iter_mut().zip(v) {
                        *s += x;
                    }
                    denom += 1;
                }
                None => {
                    if self.unk_policy == UnkPolicy::Zero {
                        denom += 1;
                    }
                }
            }
        }
        if denom > 0 {
            for s in &mut sum {
                *s /= denom as f64;
            }
        }
        sum
    }
}

/// Cosine similarity; zero if either vector has zero norm.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbedError> {
    if u.len() != v.len() {
        return Err(EmbedError::LengthMismatch { left: u.len(), right: v.len() });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (nu * nv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(text: &str) -> EmbeddingStore {
        EmbeddingStore::load(io::Cursor::new(text)).unwrap()
    }

    #[test]
    fn loads_declared_dim() {
        let s = store("2 3\nalpha 1 2 3\nbeta 0.5 -1 2\n");
        assert_eq!(s.dim(), 3);
        assert_eq!(s.get("alpha"), Some(&[1.0, 2.0, 3.0][..]));
    }

    #[test]
    fn short_row_is_error() {
        let err = EmbeddingStore::load(io::Cursor::new("1 3\nalpha 1 2\n")).unwrap_err();
        assert!(matches!(err, EmbedError::DimMismatch { row: 2, found: 2, .. }));
    }

    #[test]
    fn duplicates_last_wins_with_count() {
        let s = store("2 2\nword 1 1\nword 2 2\n");
        assert_eq!(s.duplicate_count, 1);
        assert_eq!(s.get("word"), Some(&[2.0, 2.0][..]));
    }

    #[test]
    fn lookup_normalizes() {
        let s = store("1 2\ninnovation 1 0\n");
        assert!(s.get("Innovation").is_some());
        assert!(s.get("INNOVATION").is_some());
    }

    #[test]
    fn phrase_vector_single_token() {
        let s = store("1 2\nalpha 3 4\n");
        assert_eq!(s.phrase_vector(&["alpha"]), vec![3.0, 4.0]);
    }

    #[test]
    fn phrase_vector_symmetric_cancellation() {
        let s = store("2 2\nup 1 2\ndown -1 -2\n");
        assert_eq!(s.phrase_vector(&["up", "down"]), vec![0.0, 0.0]);
    }

    #[test]
    fn phrase_vector_unk_policies() {
        let text = "1 2\nalpha 2 4\n";
        let skip = EmbeddingStore::load_with(
            io::Cursor::new(text),
            Normalizer::new(),
            UnkPolicy::Skip,
        )
        .unwrap();
        let zero = EmbeddingStore::load_with(
            io::Cursor::new(text),
            Normalizer::new(),
            UnkPolicy::Zero,
        )
        .unwrap();
        assert_eq!(skip.phrase_vector(&["alpha", "missing"]), vec![2.0, 4.0]);
        assert_eq!(zero.phrase_vector(&["alpha", "missing"]), vec![1.0, 2.0]);
        assert_eq!(skip.phrase_vector(&["missing"]), vec![0.0, 0.0]);
    }

    #[test]
    fn phrase_vector_mean_matches_componentwise_sum() {
        let s = store("5 3\na 1 0 2\nb 3 1 0\nc -1 2 2\nd 0 0 1\ne 2 2 2\n");
        let tokens = ["a", "b", "c", "d", "e"];
        let got = s.phrase_vector(&tokens);
        for k in 0..3 {
            let mut sum = 0.0;
            for t in &tokens {
                sum += s.get(t).unwrap()[k];
            }
            assert!((got[k] - sum / 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_basics() {
        let v = [1.0, 2.0, -3.0];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn cosine_zero_norm_is_zero() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn cosine_length_mismatch_is_error() {
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
    }
}
