//! Rule-based sentence segmentation.
//!
//! A boundary is a run of `.`, `!`, `?` followed by whitespace and an
//! uppercase letter or digit, unless the word ending the run is a known
//! abbreviation. Offsets are preserved so the original document can always be
//! reconstructed from its sentences.

use std::collections::BTreeSet;

use super::tokenize::tokenize;
use super::Sentence;

/// Abbreviations that end with a period but do not end a sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "etc.", "e.g.", "i.e.", "cf.", "vs.", "al.", "ca.", "approx.", "dept.", "est.", "fig.",
    "no.", "vol.", "p.", "pp.", "inc.", "ltd.", "co.", "corp.", "dr.", "mr.", "mrs.", "ms.",
    "prof.", "jr.", "sr.", "st.", "rev.", "gen.", "hon.", "sen.",
];

#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: BTreeSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        SentenceSplitter::new()
    }
}

impl SentenceSplitter {
    pub fn new() -> Self {
        SentenceSplitter {
            abbreviations: ABBREVIATIONS.iter().map(|a| a.to_string()).collect(),
        }
    }

    /// Extends the bundled abbreviation list (entries compared lowercase).
    pub fn with_extra<I, S>(extra: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut splitter = SentenceSplitter::new();
        splitter
            .abbreviations
            .extend(extra.into_iter().map(|s| s.into().to_lowercase()));
        splitter
    }

    pub fn split(&self, text: &str) -> Vec<Sentence> {
        let mut boundaries = Vec::new(); // byte index just past each terminator run
        let mut chars = text.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if !matches!(c, '.' | '!' | '?') {
                continue;
            }
            // Extend over the whole terminator run.
            let mut end = i + c.len_utf8();
            while let Some((j, c2)) = chars.peek().copied() {
                if matches!(c2, '.' | '!' | '?') {
                    end = j + c2.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            if !self.is_boundary(text, i, end) {
                continue;
            }
            boundaries.push(end);
        }

        let mut sentences = Vec::new();
        let mut cursor = 0;
        for &b in boundaries.iter().chain(std::iter::once(&text.len())) {
            if b < cursor {
                continue;
            }
            let slice = &text[cursor..b];
            if let Some(sentence) = make_sentence(slice, cursor, sentences.len()) {
                sentences.push(sentence);
            }
            cursor = b;
        }
        sentences
    }

    fn is_boundary(&self, text: &str, run_start: usize, run_end: usize) -> bool {
        // Must be followed by whitespace, then an uppercase letter or digit.
        let rest = &text[run_end..];
        match rest.chars().next() {
            Some(c) if c.is_whitespace() => {}
            _ => return false,
        }
        let next_word_char = rest.trim_start().chars().next();
        match next_word_char {
            Some(c) if c.is_uppercase() || c.is_ascii_digit() => {}
            _ => return false,
        }
        // Abbreviation guard only applies to plain periods.
        if &text[run_start..run_end] == "." {
            let word_start = text[..run_end]
                .rfind(|c: char| c.is_whitespace())
                .map(|i| i + 1)
                .unwrap_or(0);
            let word = text[word_start..run_end].to_lowercase();
            if self.abbreviations.contains(&word) {
                return false;
            }
        }
        true
    }
}

fn make_sentence(slice: &str, slice_start: usize, index: usize) -> Option<Sentence> {
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if trimmed.is_empty() {
        return None;
    }
    let (tokens, offsets) = tokenize(trimmed);
    Some(Sentence {
        doc_id: String::new(),
        index,
        start: slice_start + lead,
        text: trimmed.to_string(),
        tokens,
        offsets,
    })
}

/// Splits with the bundled abbreviation list.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    SentenceSplitter::new().split(text)
}
