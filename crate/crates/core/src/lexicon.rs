//! The gold-standard lexicon: categorized multi-word terms, loaded from TSV,
//! keyed by canonical form, and grown over time as experts accept new
//! candidates.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::digest::fnv1a64_hex;
use crate::normalize::Normalizer;

/// The six concept categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Sus,
    Dig,
    Mag,
    Inn,
    Bus,
    Cor,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Sus,
        Category::Dig,
        Category::Mag,
        Category::Inn,
        Category::Bus,
        Category::Cor,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Category::Sus => "sus",
            Category::Dig => "dig",
            Category::Mag => "mag",
            Category::Inn => "inn",
            Category::Bus => "bus",
            Category::Cor => "cor",
        }
    }

    /// Reporting label.
    pub fn label(self) -> &'static str {
        match self {
            Category::Sus => "durabilité",
            Category::Dig => "transformation numérique",
            Category::Mag => "gestion du changement",
            Category::Inn => "activités d'innovation",
            Category::Bus => "modèles d'entreprise",
            Category::Cor => "responsabilité sociale des entreprises",
        }
    }

    /// Label used in the `<phrase>`/`<mot>` annotation format.
    pub fn annotation_label(self) -> &'static str {
        match self {
            Category::Sus => "Sustainability",
            Category::Dig => "Digital transformation",
            Category::Mag => "Change management",
            Category::Inn => "Innovation activities",
            Category::Bus => "Business models",
            Category::Cor => "Corporate social responsibility",
        }
    }

    pub fn from_code(code: &str) -> Option<Category> {
        Category::ALL.iter().copied().find(|c| c.code() == code)
    }

    pub fn from_annotation_label(label: &str) -> Option<Category> {
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.annotation_label() == label)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One gold-standard entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub surface: String,
    pub canonical: String,
    pub category: Category,
    pub token_count: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("row {row}: unknown category code {code:?}")]
    BadCategory { row: usize, code: String },
    #[error("row {row}: expected at least 2 tab-separated columns")]
    BadRow { row: usize },
    #[error("row {row}: surface normalizes to an empty canonical")]
    EmptyCanonical { row: usize },
    #[error(
        "duplicate canonical {canonical:?} with conflicting categories {first} and {second}"
    )]
    DuplicateConflict {
        canonical: String,
        first: Category,
        second: Category,
    },
    #[error("missing header line `surface\\tcategory`")]
    MissingHeader,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Immutable set of terms keyed by canonical form. Merges produce a new value
/// with a new version string; readers can share a `Lexicon` freely.
#[derive(Debug, Clone)]
pub struct Lexicon {
    terms: BTreeMap<String, Term>,
    version: String,
    generation: u64,
    normalizer: Normalizer,
}

impl Lexicon {
    pub fn new(normalizer: Normalizer) -> Self {
        let mut lex = Lexicon {
            terms: BTreeMap::new(),
            version: String::new(),
            generation: 0,
            normalizer,
        };
        lex.version = lex.compute_version();
        lex
    }

    /// Reads the TSV form: header `surface<TAB>category`, optional third
    /// `canonical` column, `#` comment lines ignored.
    pub fn load<R: BufRead>(reader: R, normalizer: Normalizer) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::new(normalizer);
        let mut saw_header = false;
        for (idx, line) in reader.lines().enumerate() {
            let row = idx + 1;
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if let Some(generation) = trimmed.strip_prefix("# generation: ") {
                lex.generation = generation.trim().parse().unwrap_or(0);
                continue;
            }
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if !saw_header {
                let mut cols = trimmed.split('\t');
                if cols.next().map(str::trim) != Some("surface") {
                    return Err(LexiconError::MissingHeader);
                }
                saw_header = true;
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').collect();
            if cols.len() < 2 {
                return Err(LexiconError::BadRow { row });
            }
            let surface = cols[0].trim();
            let code = cols[1].trim();
            let category =
                Category::from_code(code).ok_or_else(|| LexiconError::BadCategory {
                    row,
                    code: code.to_string(),
                })?;
            let canonical = match cols.get(2).map(|c| c.trim()) {
                Some(c) if !c.is_empty() => lex.normalizer.normalize_term(c),
                _ => lex.normalizer.normalize_term(surface),
            };
            if canonical.is_empty() {
                return Err(LexiconError::EmptyCanonical { row });
            }
            lex.insert_term(surface, canonical, category)?;
        }
        if !saw_header {
            return Err(LexiconError::MissingHeader);
        }
        lex.version = lex.compute_version();
        Ok(lex)
    }

    pub fn load_path(path: &Path, normalizer: Normalizer) -> Result<Self, LexiconError> {
        let file = std::fs::File::open(path)?;
        Lexicon::load(io::BufReader::new(file), normalizer)
    }

    fn insert_term(
        &mut self,
        surface: &str,
        canonical: String,
        category: Category,
    ) -> Result<(), LexiconError> {
        if let Some(existing) = self.terms.get(&canonical) {
            if existing.category != category {
                return Err(LexiconError::DuplicateConflict {
                    canonical,
                    first: existing.category,
                    second: category,
                });
            }
            return Ok(()); // same canonical, same category: merged
        }
        let token_count = canonical.split(' ').count();
        self.terms.insert(
            canonical.clone(),
            Term {
                surface: surface.to_string(),
                canonical,
                category,
                token_count,
            },
        );
        Ok(())
    }

    /// Returns a new lexicon with the accepted terms added. Re-adding an
    /// existing (canonical, category) pair is a no-op; a category conflict
    /// aborts the whole merge.
    pub fn merge_accepted(
        &self,
        accepted: &[(String, Category)],
    ) -> Result<Lexicon, LexiconError> {
        let mut next = self.clone();
        for (ngram, category) in accepted {
            let canonical = next.normalizer.normalize_term(ngram);
            if canonical.is_empty() {
                return Err(LexiconError::EmptyCanonical { row: 0 });
            }
            next.insert_term(ngram, canonical, *category)?;
        }
        next.generation += 1;
        next.version = next.compute_version();
        Ok(next)
    }

    fn compute_version(&self) -> String {
        let mut buf = String::new();
        for (canonical, term) in &self.terms {
            buf.push_str(canonical);
            buf.push('\t');
            buf.push_str(term.category.code());
            buf.push('\n');
        }
        format!(
            "v{}.{}-{}",
            self.generation,
            self.terms.len(),
            fnv1a64_hex(buf.as_bytes())
        )
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, canonical: &str) -> Option<&Term> {
        self.terms.get(canonical)
    }

    pub fn contains(&self, canonical: &str) -> bool {
        self.terms.contains_key(canonical)
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.values()
    }

    pub fn canonicals(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    /// Longest term length in tokens; matching never probes past this.
    pub fn max_term_tokens(&self) -> usize {
        self.terms.values().map(|t| t.token_count).max().unwrap_or(0)
    }

    /// Writes the TSV form with the canonical column filled in.
    pub fn save<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# generation: {}", self.generation)?;
        writeln!(w, "surface\tcategory\tcanonical")?;
        for term in self.terms.values() {
            writeln!(w, "{}\t{}\t{}", term.surface, term.category.code(), term.canonical)?;
        }
        Ok(())
    }
}
