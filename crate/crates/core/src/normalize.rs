//! Canonical text normalization.
//!
//! Every place the pipeline compares words — lexicon keys, term matching,
//! embedding lookups — goes through the same folding rules so that surface
//! variation (case, accents, spacing, inflection listed in the lemma table)
//! never splits one term into several.

use std::collections::BTreeMap;

use unicode_normalization::UnicodeNormalization;

/// Folds and canonicalizes text. Cheap to clone; the lemma table is the only
/// state.
#[derive(Debug, Clone, Default)]
pub struct Normalizer {
    lemmas: BTreeMap<String, String>,
}

impl Normalizer {
    pub fn new() -> Self {
        Normalizer::default()
    }

    /// Adds an exact token → lemma substitution (e.g. `models` → `model`).
    pub fn with_lemmas<I, S>(lemmas: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        Normalizer {
            lemmas: lemmas
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    pub fn lemma_count(&self) -> usize {
        self.lemmas.len()
    }

    /// Canonical form of a term or phrase: compatibility-normalized,
    /// lowercased, accent-folded, whitespace collapsed, punctuation-adjacent
    /// whitespace removed, lemma table applied per token. Idempotent.
    pub fn normalize_term(&self, surface: &str) -> String {
        let folded = fold(surface);
        let spaced = normalize_punct_whitespace(&folded);
        let mut out = String::with_capacity(spaced.len());
        for token in spaced.split_whitespace() {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&self.apply_lemma(token));
        }
        out
    }

    /// Token-level folding for comparisons: same rules as `normalize_term`
    /// minus the whitespace handling.
    pub fn normalize_token(&self, token: &str) -> String {
        let folded = fold(token);
        let trimmed = folded.trim();
        if trimmed.contains(char::is_whitespace) {
            // A "token" that still holds whitespace is treated as a phrase.
            return self.normalize_term(trimmed);
        }
        self.apply_lemma(trimmed)
    }

    /// Case and accent folding only: no whitespace handling, no lemmas.
    /// Offsets are not preserved; use for containment checks, not slicing.
    pub fn fold(&self, text: &str) -> String {
        fold(text)
    }

    fn apply_lemma(&self, token: &str) -> String {
        // Chase chains like models → model → modele. A cyclic table entry
        // leaves the token unchanged, which keeps normalization idempotent.
        let mut seen: Vec<&str> = vec![token];
        let mut current = token;
        while let Some(next) = self.lemmas.get(current) {
            if seen.iter().any(|s| s == next) {
                return token.to_string();
            }
            seen.push(next);
            current = next;
        }
        current.to_string()
    }
}

/// NFKC, lowercase, then NFKD with combining diacritics removed.
fn fold(s: &str) -> String {
    let compat: String = s.nfkc().collect();
    let lowered: String = compat.chars().flat_map(char::to_lowercase).collect();
    lowered.nfkd().filter(|c| !is_combining_mark(*c)).collect()
}

fn is_combining_mark(c: char) -> bool {
    matches!(c,
        '\u{0300}'..='\u{036F}'
        | '\u{1AB0}'..='\u{1AFF}'
        | '\u{1DC0}'..='\u{1DFF}'
        | '\u{20D0}'..='\u{20FF}'
        | '\u{FE20}'..='\u{FE2F}')
}

const CLOSERS: &str = ".,;:!?)]}»%\u{2019}";
const OPENERS: &str = "([{«";

/// Removes whitespace before closing punctuation, after opening punctuation,
/// and around hyphens, then collapses the rest to single spaces.
fn normalize_punct_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            let mut j = i;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            let prev = out.chars().last();
            let next = chars.get(j).copied();
            let drop = match (prev, next) {
                (_, None) | (None, _) => true,
                (Some(p), Some(n)) => {
                    OPENERS.contains(p) || p == '-' || CLOSERS.contains(n) || n == '-'
                }
            };
            if !drop {
                out.push(' ');
            }
            i = j;
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}
