//! C-value scoring of multi-word term candidates.
//!
//! Candidates are n-grams (2 ≤ n ≤ max_n) drawn from maximal runs of content
//! tokens, where stopwords and punctuation act as chunk boundaries. A
//! candidate nested inside longer extracted candidates is discounted by their
//! mean frequency:
//!
//! ```text
//! cvalue(a) = log2(|a|) * f(a)                              a not nested
//! cvalue(a) = log2(|a|) * (f(a) - mean_{b ⊇ a} f(b))        otherwise
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::annotate::tokenize;
use crate::normalize::Normalizer;

/// Function words that terminate a candidate chunk.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "cannot", "could", "did", "do", "does", "doing", "down", "during", "each",
    "few", "for", "from", "further", "had", "has", "have", "having", "he", "her", "here",
    "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it",
    "its", "itself", "just", "may", "me", "might", "more", "most", "must", "my", "myself",
    "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our",
    "ours", "ourselves", "out", "over", "own", "same", "shall", "she", "should", "so", "some",
    "such", "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there",
    "these", "they", "this", "those", "through", "to", "too", "under", "until", "up", "upon",
    "very", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom",
    "why", "will", "with", "would", "you", "your", "yours", "yourself", "yourselves",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub ngram: Vec<String>,
    pub frequency: usize,
    /// Longer extracted candidates this one occurs inside.
    pub nested_in: Vec<Vec<String>>,
    pub cvalue: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CvalueError {
    #[error("max_n must lie in [2, 6], got {0}")]
    BadMaxN(usize),
    #[error("min_freq must be at least 1, got {0}")]
    BadMinFreq(usize),
}

/// Scores every candidate n-gram of the passage texts, ranked by descending
/// C-value (frequency, then lexicographic n-gram as tie-breaks).
pub fn cvalue_candidates<'a, I>(
    passages: I,
    max_n: usize,
    min_freq: usize,
    normalizer: &Normalizer,
) -> Result<Vec<CandidateScore>, CvalueError>
where
    I: IntoIterator<Item = &'a str>,
{
    if !(2..=6).contains(&max_n) {
        return Err(CvalueError::BadMaxN(max_n));
    }
    if min_freq == 0 {
        return Err(CvalueError::BadMinFreq(min_freq));
    }
    let stopwords: BTreeSet<&str> = STOPWORDS.iter().copied().collect();

    let mut counts: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for text in passages {
        for chunk in content_chunks(text, normalizer, &stopwords) {
            for n in 2..=max_n.min(chunk.len()) {
                for gram in chunk.windows(n) {
                    *counts.entry(gram.to_vec()).or_insert(0) += 1;
                }
            }
        }
    }
    counts.retain(|_, f| *f >= min_freq);

    // For nesting we only need, per candidate, the set of containers.
    let mut nested: BTreeMap<&[String], Vec<&Vec<String>>> = BTreeMap::new();
    for container in counts.keys() {
        let mut subgrams: BTreeSet<&[String]> = BTreeSet::new();
        for n in 2..container.len() {
            for gram in container.windows(n) {
                if counts.contains_key(gram) {
                    subgrams.insert(gram);
                }
            }
        }
        for gram in subgrams {
            nested.entry(gram).or_default().push(container);
        }
    }

    let mut scores: Vec<CandidateScore> = counts
        .iter()
        .map(|(ngram, &frequency)| {
            let containers = nested.get(ngram.as_slice());
            let cvalue = match containers {
                None => (ngram.len() as f64).log2() * frequency as f64,
                Some(list) => {
                    let sum: usize = list.iter().map(|b| counts[*b]).sum();
                    let mean = sum as f64 / list.len() as f64;
                    (ngram.len() as f64).log2() * (frequency as f64 - mean)
                }
            };
            CandidateScore {
                ngram: ngram.clone(),
                frequency,
                nested_in: containers
                    .map(|list| list.iter().map(|b| (*b).clone()).collect())
                    .unwrap_or_default(),
                cvalue,
            }
        })
        .collect();

    scores.sort_by(|a, b| {
        b.cvalue
            .partial_cmp(&a.cvalue)
            .unwrap()
            .then(b.frequency.cmp(&a.frequency))
            .then(a.ngram.cmp(&b.ngram))
    });
    Ok(scores)
}

/// Maximal runs of normalized content tokens.
fn content_chunks(
    text: &str,
    normalizer: &Normalizer,
    stopwords: &BTreeSet<&str>,
) -> Vec<Vec<String>> {
    let (tokens, _) = tokenize(text);
    let mut chunks = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for token in &tokens {
        let norm = normalizer.normalize_token(token);
        let is_content = !norm.is_empty()
            && norm.chars().any(char::is_alphanumeric)
            && !stopwords.contains(norm.as_str());
        if is_content {
            current.push(norm);
        } else if !current.is_empty() {
            chunks.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    chunks
}

/// TSV report: `ngram<TAB>frequency<TAB>cvalue`.
pub fn write_candidate_report<W: std::io::Write>(
    mut w: W,
    scores: &[CandidateScore],
) -> std::io::Result<()> {
    writeln!(w, "ngram\tfrequency\tcvalue")?;
    for s in scores {
        writeln!(w, "{}\t{}\t{}", s.ngram.join(" "), s.frequency, s.cvalue)?;
    }
    Ok(())
}
