//! Sentence-level annotation: segmentation, gold-term matching, the
//! `<phrase>`/`<mot>` markup format, and BIO label conversion.

pub mod bio;
pub mod markup;
mod matcher;
mod segment;
mod tokenize;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lexicon::Category;

pub use bio::{from_bio, to_bio, BioError, BioLabel};
pub use markup::{emit_annotation, parse_annotation, AnnotationParseError};
pub use matcher::match_terms;
pub use segment::{split_sentences, SentenceSplitter, ABBREVIATIONS};
pub use tokenize::tokenize;

/// A tokenized sentence carrying enough provenance to reconstruct its source
/// document slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub index: usize,
    /// Byte offset of this sentence in the source document.
    pub start: usize,
    /// The sentence slice itself.
    pub text: String,
    pub tokens: Vec<String>,
    /// Byte offsets into `text`, one `(start, end)` per token.
    pub offsets: Vec<(usize, usize)>,
}

impl Sentence {
    /// Builds a sentence directly from text (single-sentence convenience).
    pub fn from_text(text: &str) -> Sentence {
        let (tokens, offsets) = tokenize(text);
        Sentence {
            doc_id: String::new(),
            index: 0,
            start: 0,
            text: text.to_string(),
            tokens,
            offsets,
        }
    }

    pub fn with_doc_id(mut self, doc_id: &str) -> Sentence {
        self.doc_id = doc_id.to_string();
        self
    }

    /// Source text of a token range (byte-exact, including interior spacing).
    pub fn slice(&self, start_tok: usize, end_tok: usize) -> &str {
        if start_tok >= end_tok || end_tok > self.offsets.len() {
            return "";
        }
        &self.text[self.offsets[start_tok].0..self.offsets[end_tok - 1].1]
    }
}

/// Label carried by a span or a non-O BIO tag: one of the six categories, or
/// the macro-term pseudo-category. Serializes as its code (`dig`, `mac`, …).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpanLabel {
    Category(Category),
    Macro,
}

impl Serialize for SpanLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for SpanLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        SpanLabel::from_code(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown span label {s:?}")))
    }
}

impl SpanLabel {
    pub fn code(self) -> &'static str {
        match self {
            SpanLabel::Category(c) => c.code(),
            SpanLabel::Macro => "mac",
        }
    }

    pub fn from_code(code: &str) -> Option<SpanLabel> {
        if code == "mac" {
            return Some(SpanLabel::Macro);
        }
        Category::from_code(code).map(SpanLabel::Category)
    }

    /// Label written to the `category` attribute of `<mot>`/`<phrase>`.
    pub fn annotation_label(self) -> &'static str {
        match self {
            SpanLabel::Category(c) => c.annotation_label(),
            SpanLabel::Macro => "macro-term",
        }
    }

    pub fn from_annotation_label(label: &str) -> Option<SpanLabel> {
        if label == "macro-term" {
            return Some(SpanLabel::Macro);
        }
        Category::from_annotation_label(label).map(SpanLabel::Category)
    }
}

impl fmt::Display for SpanLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A labeled token range. A plain span carries one lexicon canonical; a
/// macro span is the union of two or more overlapping lexicon matches and
/// lists every constituent canonical in match order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSpan {
    /// First token index (inclusive).
    pub start: usize,
    /// One past the last token index.
    pub end: usize,
    pub label: SpanLabel,
    pub canonicals: Vec<String>,
}

impl TermSpan {
    pub fn term(start: usize, end: usize, category: Category, canonical: &str) -> TermSpan {
        TermSpan {
            start,
            end,
            label: SpanLabel::Category(category),
            canonicals: vec![canonical.to_string()],
        }
    }

    pub fn macro_term(start: usize, end: usize, canonicals: Vec<String>) -> TermSpan {
        debug_assert!(canonicals.len() >= 2);
        TermSpan {
            start,
            end,
            label: SpanLabel::Macro,
            canonicals,
        }
    }

    pub fn is_macro(&self) -> bool {
        matches!(self.label, SpanLabel::Macro)
    }

    pub fn category(&self) -> Option<Category> {
        match self.label {
            SpanLabel::Category(c) => Some(c),
            SpanLabel::Macro => None,
        }
    }

    /// Canonical of a plain span; first constituent of a macro span.
    pub fn canonical(&self) -> &str {
        &self.canonicals[0]
    }
}
