//! Sequence-labeling models built from first principles: a convolutional
//! tagger with log-softmax output, its CRF-decoded variant, and a sparse
//! linear-feature CRF baseline. Training runs adaptive-moment descent over
//! reverse-mode gradients; decoding is per-token argmax or Viterbi.

pub mod cnn;
pub mod crf;
pub mod feats;
pub mod gradcheck;
pub mod loss;
pub mod train;

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotate::bio::ConllSequence;
use crate::annotate::{to_bio, BioError, BioLabel, SpanLabel};
use crate::blocks::ContextBlock;
use crate::lexicon::Category;
use crate::normalize::Normalizer;

pub use cnn::{CnnConfig, Mode};
pub use crf::CrfParams;
pub use gradcheck::{grad_check, GradCheckReport};
pub use train::{train, EpochStats, TrainConfig};

#[derive(Debug, thiserror::Error)]
pub enum TaggerError {
    #[error("empty training set")]
    EmptyTrainSet,
    #[error("training loss diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("token id {id} out of range for vocabulary of size {size}")]
    BadTokenId { id: usize, size: usize },
    #[error("sequence has {tokens} tokens but {labels} labels")]
    LabelMismatch { tokens: usize, labels: usize },
    #[error("invalid model configuration: {0}")]
    BadConfig(String),
    #[error("unsupported model file (format {format:?}, version {version})")]
    BadModelFile { format: String, version: u32 },
    #[error("unknown model kind {0:?}")]
    BadModelKind(String),
    #[error(transparent)]
    Bio(#[from] BioError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Cnn,
    CnnCrf,
    LinearCrf,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Cnn => "cnn",
            ModelKind::CnnCrf => "cnn-crf",
            ModelKind::LinearCrf => "linear-crf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = TaggerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cnn" => Ok(ModelKind::Cnn),
            "cnn-crf" | "cnn_crf" => Ok(ModelKind::CnnCrf),
            "linear-crf" | "linear_crf" => Ok(ModelKind::LinearCrf),
            other => Err(TaggerError::BadModelKind(other.to_string())),
        }
    }
}

/// The fixed label inventory: `O` first, then `I-` labels for the six
/// categories plus the macro pseudo-category, then their `B-` counterparts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<String>", try_from = "Vec<String>")]
pub struct LabelSet {
    labels: Vec<BioLabel>,
}

impl LabelSet {
    pub fn standard() -> LabelSet {
        let mut labels = vec![BioLabel::O];
        let span_labels: Vec<SpanLabel> = Category::ALL
            .iter()
            .map(|c| SpanLabel::Category(*c))
            .chain(std::iter::once(SpanLabel::Macro))
            .collect();
        labels.extend(span_labels.iter().map(|l| BioLabel::In(*l)));
        labels.extend(span_labels.iter().map(|l| BioLabel::Begin(*l)));
        LabelSet { labels }
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn id(&self, label: BioLabel) -> usize {
        self.labels
            .iter()
            .position(|l| *l == label)
            .expect("label outside the label set")
    }

    pub fn label(&self, id: usize) -> BioLabel {
        self.labels[id]
    }

    pub fn labels(&self) -> &[BioLabel] {
        &self.labels
    }
}

impl From<LabelSet> for Vec<String> {
    fn from(set: LabelSet) -> Vec<String> {
        set.labels.iter().map(|l| l.to_string()).collect()
    }
}

impl TryFrom<Vec<String>> for LabelSet {
    type Error = String;

    fn try_from(strings: Vec<String>) -> Result<Self, Self::Error> {
        let labels = strings
            .iter()
            .map(|s| s.parse().map_err(|e| format!("{e}")))
            .collect::<Result<Vec<BioLabel>, String>>()?;
        if labels.first() != Some(&BioLabel::O) {
            return Err("label set must start with O".to_string());
        }
        Ok(LabelSet { labels })
    }
}

/// Training vocabulary over folded token forms. Ids 0 and 1 are reserved for
/// padding and unknown tokens; only train-corpus tokens seen at least
/// `min_freq` times receive ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
    pub min_freq: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    words: Vec<String>,
    min_freq: usize,
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> VocabRepr {
        VocabRepr { words: v.words, min_freq: v.min_freq }
    }
}

impl From<VocabRepr> for Vocab {
    fn from(repr: VocabRepr) -> Vocab {
        let index = repr
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocab { words: repr.words, index, min_freq: repr.min_freq }
    }
}

impl Vocab {
    pub const PAD: usize = 0;
    pub const UNK: usize = 1;

    pub fn build(sequences: &[Sequence], min_freq: usize) -> Vocab {
        let normalizer = Normalizer::new();
        let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
        for seq in sequences {
            for token in &seq.tokens {
                *counts.entry(normalizer.normalize_token(token)).or_insert(0) += 1;
            }
        }
        let mut words = vec!["<pad>".to_string(), "<unk>".to_string()];
        words.extend(
            counts
                .into_iter()
                .filter(|(w, c)| *c >= min_freq && !w.is_empty())
                .map(|(w, _)| w),
        );
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocab { words, index, min_freq }
    }

    pub fn id(&self, token: &str) -> usize {
        let folded = Normalizer::new().normalize_token(token);
        self.index.get(&folded).copied().unwrap_or(Vocab::UNK)
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }
}

/// A labeled token sequence, the unit of training and evaluation. Pipeline
/// sequences are whole context blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sequence {
    pub id: Option<String>,
    pub tokens: Vec<String>,
    pub labels: Vec<BioLabel>,
}

impl Sequence {
    pub fn new(tokens: Vec<String>, labels: Vec<BioLabel>) -> Sequence {
        Sequence { id: None, tokens, labels }
    }
}

/// Flattens a context block into one training sequence; gold labels come from
/// the block's spans, sentence by sentence.
pub fn block_to_sequence(block: &ContextBlock) -> Result<Sequence, BioError> {
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    for (sentence, spans) in block.sentences.iter().zip(&block.spans) {
        tokens.extend(sentence.tokens.iter().cloned());
        labels.extend(to_bio(sentence, spans)?);
    }
    Ok(Sequence { id: Some(block.block_id.clone()), tokens, labels })
}

pub fn blocks_to_sequences(blocks: &[ContextBlock]) -> Result<Vec<Sequence>, BioError> {
    blocks.iter().map(block_to_sequence).collect()
}

impl From<ConllSequence> for Sequence {
    fn from(seq: ConllSequence) -> Sequence {
        Sequence { id: seq.id, tokens: seq.tokens, labels: seq.gold }
    }
}

/// Persisted model container.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaggerModel {
    Cnn(cnn::CnnModel),
    CnnCrf(cnn::CnnCrfModel),
    LinearCrf(feats::LinearCrfModel),
}

const MODEL_FORMAT: &str = "lexiforge-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: TaggerModel,
}

impl TaggerModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TaggerModel::Cnn(_) => ModelKind::Cnn,
            TaggerModel::CnnCrf(_) => ModelKind::CnnCrf,
            TaggerModel::LinearCrf(_) => ModelKind::LinearCrf,
        }
    }

    pub fn labels(&self) -> &LabelSet {
        match self {
            TaggerModel::Cnn(m) => &m.labels,
            TaggerModel::CnnCrf(m) => &m.labels,
            TaggerModel::LinearCrf(m) => &m.labels,
        }
    }

    /// Labels one sentence worth of tokens. Out-of-vocabulary tokens ride the
    /// unknown id; output length always equals input length.
    pub fn predict(&self, tokens: &[String]) -> Vec<BioLabel> {
        if tokens.is_empty() {
            return Vec::new();
        }
        let ids = match self {
            TaggerModel::Cnn(m) => m.decode(tokens),
            TaggerModel::CnnCrf(m) => m.decode(tokens),
            TaggerModel::LinearCrf(m) => m.decode(tokens),
        };
        let labels = self.labels();
        ids.into_iter().map(|id| labels.label(id)).collect()
    }

    pub fn predict_all(&self, sentences: &[Vec<String>]) -> Vec<Vec<BioLabel>> {
        sentences.iter().map(|s| self.predict(s)).collect()
    }

    pub fn save<W: Write>(&self, w: W) -> Result<(), TaggerError> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        serde_json::to_writer(w, &file)?;
        Ok(())
    }

    pub fn save_path(&self, path: &Path) -> Result<(), TaggerError> {
        let file = std::fs::File::create(path)?;
        self.save(io::BufWriter::new(file))
    }

    pub fn load<R: BufRead>(r: R) -> Result<TaggerModel, TaggerError> {
        let file: ModelFile = serde_json::from_reader(r)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(TaggerError::BadModelFile {
                format: file.format,
                version: file.version,
            });
        }
        Ok(file.model)
    }

    pub fn load_path(path: &Path) -> Result<TaggerModel, TaggerError> {
        let file = std::fs::File::open(path)?;
        TaggerModel::load(io::BufReader::new(file))
    }
}
