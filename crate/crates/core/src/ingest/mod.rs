//! Manifest-driven ingestion of local HTML and plain-text documents with
//! URL, tag, keyword, and language filters.

pub mod html;
pub mod langid;
pub mod store;
pub mod url;

use std::collections::BTreeSet;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::normalize::Normalizer;

pub use html::{decode_html, extract_tagged_text, ExtractedDoc, TaggedText};
pub use langid::LanguageIdentifier;
pub use store::{CorpusStore, LangStats};
pub use url::{filter_url, parse_url, DropReason, UrlDecision};

/// The five seed keywords the corpus is filtered by.
pub const DEFAULT_KEYWORDS: [&str; 5] =
    ["innovation", "recherche", "development", "strategy", "design"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRules {
    pub seed_keywords: Vec<String>,
    pub url_excludes: Vec<String>,
    pub allowed_tags: BTreeSet<String>,
    pub homepage_only: bool,
    pub max_depth: usize,
}

impl Default for FilterRules {
    fn default() -> Self {
        FilterRules {
            seed_keywords: DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect(),
            url_excludes: Vec::new(),
            allowed_tags: ["p", "title", "h1", "h2"].iter().map(|s| s.to_string()).collect(),
            homepage_only: true,
            max_depth: 1,
        }
    }
}

impl FilterRules {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.seed_keywords.is_empty() {
            return Err(IngestError::Rules("seed keyword list is empty".into()));
        }
        if self.allowed_tags.is_empty() {
            return Err(IngestError::Rules("allowed tag set is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("encoding: {0}")]
    Encoding(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("invalid filter rules: {0}")]
    Rules(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Html,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub doc_id: String,
    pub path: PathBuf,
    pub url: String,
    pub company: String,
    pub sector: String,
    pub kind: DocKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SourceManifest {
    pub entries: Vec<ManifestEntry>,
}

impl SourceManifest {
    /// Reads the JSON array form and checks doc_id uniqueness.
    pub fn load(path: &Path) -> Result<SourceManifest, IngestError> {
        let file = std::fs::File::open(path)?;
        let manifest: SourceManifest = serde_json::from_reader(io::BufReader::new(file))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let mut seen = BTreeSet::new();
        for entry in &self.entries {
            if entry.doc_id.is_empty() {
                return Err(IngestError::Manifest("empty doc_id".into()));
            }
            if !seen.insert(&entry.doc_id) {
                return Err(IngestError::Manifest(format!("duplicate doc_id {:?}", entry.doc_id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Web,
    PdfText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    pub doc_id: String,
    pub tag: String,
    pub text: String,
    pub lang: String,
    pub lang_confidence: f64,
    pub source_kind: SourceKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedDoc {
    pub doc_id: String,
    pub reason: String,
}

/// Whole-word containment, case- and accent-insensitive.
pub fn contains_keyword(text: &str, keyword: &str, normalizer: &Normalizer) -> bool {
    let haystack = normalizer.fold(text);
    let needle = normalizer.fold(keyword);
    if needle.is_empty() {
        return false;
    }
    let hay: Vec<char> = haystack.chars().collect();
    let pat: Vec<char> = needle.chars().collect();
    if pat.len() > hay.len() {
        return false;
    }
    for start in 0..=hay.len() - pat.len() {
        if hay[start..start + pat.len()] != pat[..] {
            continue;
        }
        let before_ok = start == 0 || !hay[start - 1].is_alphanumeric();
        let after = start + pat.len();
        let after_ok = after == hay.len() || !hay[after].is_alphanumeric();
        if before_ok && after_ok {
            return true;
        }
    }
    false
}

/// Extracts keyword-bearing passages from HTML bytes: only allowed tags, only
/// elements containing at least one seed keyword as a whole word, duplicates
/// within the document dropped (first occurrence wins). Language is detected
/// per passage, seeded by the document's `lang` attribute.
pub fn extract_passages(
    doc: &[u8],
    rules: &FilterRules,
    langid: &LanguageIdentifier,
) -> Result<Vec<Passage>, IngestError> {
    rules.validate()?;
    let normalizer = Normalizer::new();
    let decoded = decode_html(doc)?;
    let extracted = extract_tagged_text(&decoded, &rules.allowed_tags);
    let declared = extracted.declared_lang.as_deref();
    let mut seen = BTreeSet::new();
    let mut passages = Vec::new();
    for TaggedText { tag, text } in extracted.texts {
        let has_keyword = rules
            .seed_keywords
            .iter()
            .any(|kw| contains_keyword(&text, kw, &normalizer));
        if !has_keyword || !seen.insert(text.clone()) {
            continue;
        }
        let (lang, lang_confidence) = langid.detect(&text, declared);
        passages.push(Passage {
            doc_id: String::new(),
            tag,
            text,
            lang,
            lang_confidence,
            source_kind: SourceKind::Web,
        });
    }
    Ok(passages)
}

/// Pre-extracted report text: blank-line-separated paragraphs, one passage
/// each, no keyword filter (these documents were curated upstream).
pub fn text_passages(text: &str, langid: &LanguageIdentifier) -> Vec<Passage> {
    text.split("\n\n")
        .map(|p| p.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|p| !p.is_empty())
        .map(|text| {
            let (lang, lang_confidence) = langid.detect(&text, None);
            Passage {
                doc_id: String::new(),
                tag: "p".to_string(),
                text,
                lang,
                lang_confidence,
                source_kind: SourceKind::PdfText,
            }
        })
        .collect()
}

/// Runs the whole ingestion pass. Per-document failures (missing files,
/// undecodable bytes, filtered URLs) are recorded and skipped; the pass
/// itself only fails on an invalid manifest or rules.
pub fn ingest(
    manifest: &SourceManifest,
    rules: &FilterRules,
    langid: &LanguageIdentifier,
) -> Result<CorpusStore, IngestError> {
    manifest.validate()?;
    rules.validate()?;
    let mut passages = Vec::new();
    let mut skipped = Vec::new();
    for entry in &manifest.entries {
        match filter_url(&entry.url, rules) {
            UrlDecision::Keep => {}
            UrlDecision::Drop(reason) => {
                skipped.push(SkippedDoc {
                    doc_id: entry.doc_id.clone(),
                    reason: format!("url_filtered: {reason:?}"),
                });
                continue;
            }
        }
        let bytes = match std::fs::read(&entry.path) {
            Ok(bytes) => bytes,
            Err(err) => {
                skipped.push(SkippedDoc {
                    doc_id: entry.doc_id.clone(),
                    reason: format!("io_error: {err}"),
                });
                continue;
            }
        };
        let doc_passages = match entry.kind {
            DocKind::Html => match extract_passages(&bytes, rules, langid) {
                Ok(p) => p,
                Err(err) => {
                    skipped.push(SkippedDoc {
                        doc_id: entry.doc_id.clone(),
                        reason: format!("{err}"),
                    });
                    continue;
                }
            },
            DocKind::Text => match String::from_utf8(bytes) {
                Ok(text) => text_passages(&text, langid),
                Err(_) => {
                    skipped.push(SkippedDoc {
                        doc_id: entry.doc_id.clone(),
                        reason: "encoding: text document is not valid utf-8".to_string(),
                    });
                    continue;
                }
            },
        };
        for mut passage in doc_passages {
            passage.doc_id = entry.doc_id.clone();
            passages.push(passage);
        }
    }
    Ok(CorpusStore::build(passages, skipped, manifest))
}
