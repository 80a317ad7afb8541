//! Sparse feature templates and the linear-feature CRF baseline.
//!
//! Emissions are dot products between per-token binary feature vectors and a
//! weight matrix; decoding runs through the shared CRF layer.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::crf::{viterbi, CrfParams};
use super::{LabelSet, Sequence};

/// Feature strings for one token: identity, lowercase form, prefixes and
/// suffixes up to three characters, shape flags, and the identities of the
/// tokens in a ±2 window.
pub fn token_features(tokens: &[String], t: usize) -> Vec<String> {
    let token = &tokens[t];
    let lower = token.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let mut feats = vec![format!("w={token}"), format!("low={lower}")];
    for n in 1..=3.min(chars.len()) {
        feats.push(format!("p{n}={}", chars[..n].iter().collect::<String>()));
        feats.push(format!("s{n}={}", chars[chars.len() - n..].iter().collect::<String>()));
    }
    if token.chars().next().is_some_and(char::is_uppercase) {
        feats.push("cap".to_string());
    }
    if !token.is_empty() && token.chars().all(|c| c.is_ascii_digit()) {
        feats.push("digit".to_string());
    }
    for offset in [-2i64, -1, 1, 2] {
        let pos = t as i64 + offset;
        let value = if pos < 0 {
            "<s>".to_string()
        } else if pos as usize >= tokens.len() {
            "</s>".to_string()
        } else {
            tokens[pos as usize].to_lowercase()
        };
        feats.push(format!("w[{offset:+}]={value}"));
    }
    feats
}

/// Train-time feature inventory; unseen features have no weight and simply
/// do not fire at prediction time.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct FeatureIndex {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<FeatureIndex> for Vec<String> {
    fn from(f: FeatureIndex) -> Vec<String> {
        f.names
    }
}

impl From<Vec<String>> for FeatureIndex {
    fn from(names: Vec<String>) -> FeatureIndex {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        FeatureIndex { names, index }
    }
}

impl FeatureIndex {
    pub fn build(sequences: &[Sequence]) -> FeatureIndex {
        let mut names = Vec::new();
        let mut index = HashMap::new();
        for seq in sequences {
            for t in 0..seq.tokens.len() {
                for feat in token_features(&seq.tokens, t) {
                    if !index.contains_key(&feat) {
                        index.insert(feat.clone(), names.len());
                        names.push(feat);
                    }
                }
            }
        }
        FeatureIndex { names, index }
    }

    pub fn get(&self, feature: &str) -> Option<usize> {
        self.index.get(feature).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Fired feature ids per token.
    pub fn fire(&self, tokens: &[String]) -> Vec<Vec<usize>> {
        (0..tokens.len())
            .map(|t| {
                token_features(tokens, t)
                    .iter()
                    .filter_map(|f| self.get(f))
                    .collect()
            })
            .collect()
    }
}

/// `emissions[t][y] = Σ_{f fired at t} weights[f][y]`.
pub fn linear_emissions(weights: &[f64], k: usize, fired: &[Vec<usize>]) -> Vec<f64> {
    let mut emissions = vec![0.0; fired.len() * k];
    for (t, feats) in fired.iter().enumerate() {
        let row = &mut emissions[t * k..(t + 1) * k];
        for &f in feats {
            let w = &weights[f * k..(f + 1) * k];
            for (r, wv) in row.iter_mut().zip(w) {
                *r += wv;
            }
        }
    }
    emissions
}

/// Scatters emission gradients back onto the fired feature weights.
pub fn linear_emissions_backward(
    d_emissions: &[f64],
    k: usize,
    fired: &[Vec<usize>],
    d_weights: &mut [f64],
) {
    for (t, feats) in fired.iter().enumerate() {
        let d_row = &d_emissions[t * k..(t + 1) * k];
        for &f in feats {
            let g = &mut d_weights[f * k..(f + 1) * k];
            for (gv, dv) in g.iter_mut().zip(d_row) {
                *gv += dv;
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearCrfModel {
    pub features: FeatureIndex,
    pub labels: LabelSet,
    /// `feature_count × k`.
    pub weights: Vec<f64>,
    pub crf: CrfParams,
    pub train_config: super::TrainConfig,
}

impl LinearCrfModel {
    pub(crate) fn decode(&self, tokens: &[String]) -> Vec<usize> {
        let fired = self.features.fire(tokens);
        let emissions = linear_emissions(&self.weights, self.labels.k(), &fired);
        viterbi(&emissions, tokens.len(), &self.crf).0
    }
}
