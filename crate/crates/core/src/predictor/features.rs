use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::RequestInput;

/// Turns a request payload into a fixed-width feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureExtractor {
    /// Bag of lowercase alphanumeric tokens hashed into `dim` buckets with a
    /// seeded FNV-1a hash, then scaled to unit L2 norm.
    HashedTokens { dim: usize, seed: u64 },
    /// Uses caller-provided dense features as-is.
    Passthrough { dim: usize },
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes().iter().chain(bytes) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

impl FeatureExtractor {
    pub fn dim(&self) -> usize {
        match *self {
            FeatureExtractor::HashedTokens { dim, .. } | FeatureExtractor::Passthrough { dim } => {
                dim
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::param("feature dimension must be positive"));
        }
        Ok(())
    }

    pub fn bucket(&self, token: &str) -> usize {
        match *self {
            FeatureExtractor::HashedTokens { dim, seed } => {
                (fnv1a(seed, token.as_bytes()) % dim as u64) as usize
            }
            FeatureExtractor::Passthrough { .. } => 0,
        }
    }

    /// Raw bucket counts before normalization.
    pub fn counts(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        for tok in tokens(text) {
            v[self.bucket(&tok)] += 1.0;
        }
        v
    }

    pub fn featurize(&self, input: &RequestInput) -> Result<Vec<f64>> {
        let dim = self.dim();
        match (self, input) {
            (_, RequestInput::Features(x)) => {
                if x.len() != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        got: x.len(),
                    });
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("features"));
                }
                Ok(x.clone())
            }
            (FeatureExtractor::HashedTokens { .. }, RequestInput::Text(text)) => {
                let mut v = self.counts(text);
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    v.iter_mut().for_each(|x| *x /= norm);
                }
                Ok(v)
            }
            (FeatureExtractor::Passthrough { .. }, RequestInput::Text(_)) => Err(Error::param(
                "passthrough extractor needs a feature vector, got text",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passthrough_is_identity() {
        let fx = FeatureExtractor::Passthrough { dim: 2 };
        let x = fx
            .featurize(&RequestInput::Features(vec![0.1, 0.2]))
            .unwrap();
        assert_eq!(x, vec![0.1, 0.2]);
        assert!(matches!(
            fx.featurize(&RequestInput::Features(vec![0.1])),
            Err(Error::Dimension { expected: 2, got: 1 })
        ));
        assert!(fx.featurize(&RequestInput::Text("hi".into())).is_err());
    }

    #[test]
    fn empty_text_is_zero() {
        let fx = FeatureExtractor::HashedTokens { dim: 16, seed: 0 };
        let x = fx.featurize(&RequestInput::Text(String::new())).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn repeated_token_lands_in_one_bucket() {
        let fx = FeatureExtractor::HashedTokens { dim: 64, seed: 7 };
        let counts = fx.counts("abc abc");
        let nonzero: Vec<_> = counts.iter().enumerate().filter(|(_, &v)| v != 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(*nonzero[0].1, 2.0);
        // Independent recomputation of the bucket: FNV-1a over seed LE bytes then "abc".
        let mut h: u64 = 0xcbf29ce484222325;
        for b in 7u64.to_le_bytes().iter().chain(b"abc") {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        assert_eq!(nonzero[0].0, (h % 64) as usize);
        let x = fx.featurize(&RequestInput::Text("abc abc".into())).unwrap();
        assert!((x[nonzero[0].0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_and_unit_norm() {
        let fx = FeatureExtractor::HashedTokens { dim: 32, seed: 3 };
        let text = RequestInput::Text("What is the capital of France? The capital!".into());
        let a = fx.featurize(&text).unwrap();
        let b = fx.featurize(&text).unwrap();
        assert_eq!(a, b);
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let other_seed = FeatureExtractor::HashedTokens { dim: 32, seed: 4 };
        assert_ne!(other_seed.featurize(&text).unwrap(), a);
    }
}
