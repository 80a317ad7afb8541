//! The single JSON configuration document and the flag > file > default
//! override chain.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lexiforge_core::ingest::{FilterRules, DEFAULT_KEYWORDS};
use lexiforge_core::tagger::{CnnConfig, ModelKind, TrainConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifest: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub workdir: Option<PathBuf>,
    pub keywords: Vec<String>,
    pub url_excludes: Vec<String>,
    pub allowed_tags: Vec<String>,
    pub homepage_only: bool,
    pub max_depth: usize,
    pub threshold: f64,
    pub scheme: u8,
    pub seed: u64,
    pub models: Vec<String>,
    pub dev_fraction: f64,
    pub train: TrainConfig,
    pub cnn: CnnConfig,
    /// Optional token → lemma table, TSV.
    pub lemmas: Option<PathBuf>,
    /// Extra sentence-splitter abbreviations.
    pub abbreviations: Vec<String>,
    /// Optional scripted review decisions applied during `pipeline`.
    pub review_replay: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            manifest: None,
            lexicon: None,
            embeddings: None,
            workdir: None,
            keywords: DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect(),
            url_excludes: Vec::new(),
            allowed_tags: ["p", "title", "h1", "h2"].map(String::from).to_vec(),
            homepage_only: true,
            max_depth: 1,
            threshold: 0.5,
            scheme: 1,
            seed: 42,
            models: vec!["linear-crf".to_string()],
            dev_fraction: 0.1,
            train: TrainConfig::default(),
            cnn: CnnConfig::default(),
            lemmas: None,
            abbreviations: Vec::new(),
            review_replay: None,
        }
    }
}

/// Command-line overrides that outrank the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub workdir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub scheme: Option<u8>,
    pub models: Option<Vec<String>>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::data(format!("config {}: {e}", path.display())))
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(workdir) = &overrides.workdir {
            self.workdir = Some(workdir.clone());
        }
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(threshold) = overrides.threshold {
            self.threshold = threshold;
        }
        if let Some(scheme) = overrides.scheme {
            self.scheme = scheme;
        }
        if let Some(models) = &overrides.models {
            self.models = models.clone();
        }
    }

    /// Flag, then config, then the environment fallback.
    pub fn resolve_workdir(&self) -> Result<PathBuf, CliError> {
        if let Some(dir) = &self.workdir {
            return Ok(dir.clone());
        }
        if let Ok(dir) = std::env::var("LEXIFORGE_WORKDIR") {
            if !dir.is_empty() {
                return Ok(PathBuf::from(dir));
            }
        }
        Err(CliError::usage(
            "no workdir: pass --workdir, set `workdir` in the config, or export LEXIFORGE_WORKDIR",
        ))
    }

    pub fn filter_rules(&self) -> FilterRules {
        FilterRules {
            seed_keywords: self.keywords.clone(),
            url_excludes: self.url_excludes.clone(),
            allowed_tags: self.allowed_tags.iter().cloned().collect(),
            homepage_only: self.homepage_only,
            max_depth: self.max_depth,
        }
    }

    pub fn model_kinds(&self) -> Result<Vec<ModelKind>, CliError> {
        self.models
            .iter()
            .map(|m| m.parse::<ModelKind>().map_err(|e| CliError::usage(format!("{e}"))))
            .collect()
    }

    /// Checks every referenced path and numeric range; names the offending
    /// field. `--dry-run` stops after this.
    pub fn validate(&self) -> Result<(), CliError> {
        let check_path = |field: &str, path: &Option<PathBuf>, required: bool| {
            match path {
                Some(p) if !p.exists() => {
                    Err(CliError::data(format!("{field}: path {} does not exist", p.display())))
                }
                None if required => Err(CliError::data(format!("{field}: missing"))),
                _ => Ok(()),
            }
        };
        check_path("manifest", &self.manifest, true)?;
        check_path("lexicon", &self.lexicon, true)?;
        check_path("embeddings", &self.embeddings, true)?;
        check_path("lemmas", &self.lemmas, false)?;
        check_path("review_replay", &self.review_replay, false)?;
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(CliError::data("threshold: must lie in [0, 1]"));
        }
        if !(1..=4).contains(&self.scheme) {
            return Err(CliError::data("scheme: must be 1..4"));
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return Err(CliError::data("dev_fraction: must lie in [0, 1)"));
        }
        if self.models.is_empty() {
            return Err(CliError::data("models: at least one model kind required"));
        }
        self.model_kinds()?;
        if self.keywords.is_empty() {
            return Err(CliError::data("keywords: at least one seed keyword required"));
        }
        Ok(())
    }
}

/// Reads a `token<TAB>lemma` table.
pub fn load_lemmas(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("lemmas {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (token, lemma) = line.split_once('\t').ok_or_else(|| {
            CliError::data(format!("lemmas {}: line {} needs token<TAB>lemma", path.display(), idx + 1))
        })?;
        pairs.push((token.trim().to_string(), lemma.trim().to_string()));
    }
    Ok(pairs)
}
