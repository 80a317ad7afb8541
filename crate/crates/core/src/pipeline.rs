//! Stage glue: corpus → annotated sentences → context blocks → splits →
//! trained taggers → candidate terms → metric cells. The command-line front
//! end drives the same functions stage by stage; calling them in order here
//! produces identical artifacts.

use std::collections::BTreeMap;

use crate::annotate::{match_terms, BioLabel, Sentence, SentenceSplitter, TermSpan};
use crate::blocks::{build_blocks, filter_blocks, BlockSource, ContextBlock};
use crate::embed::EmbeddingStore;
use crate::eval::{entity_counts_from_labels, token_counts, MetricCell, MetricLevel, PairCounts};
use crate::extract::{collect_candidates, CandidateTerm};
use crate::ingest::{CorpusStore, SourceKind};
use crate::lexicon::Lexicon;
use crate::rng::Rng;
use crate::split::{split_dataset, SplitError, SplitResult, SplitScheme};
use crate::tagger::{
    blocks_to_sequences, train, CnnConfig, EpochStats, ModelKind, Sequence, TaggerError,
    TaggerModel, TrainConfig,
};

/// One document's sentence stream with gold spans, passage by passage.
/// Sentence indices run document-wide; blocks never cross passages.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AnnotatedDoc {
    pub doc_id: String,
    pub source: BlockSource,
    pub passages: Vec<AnnotatedPassage>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AnnotatedPassage {
    pub sentences: Vec<Sentence>,
    pub spans: Vec<Vec<TermSpan>>,
}

/// Segments, tokenizes, and matches every passage of the store against the
/// lexicon, in manifest order.
pub fn annotate_store(
    store: &CorpusStore,
    lexicon: &Lexicon,
    splitter: &SentenceSplitter,
) -> Vec<AnnotatedDoc> {
    let mut docs: Vec<AnnotatedDoc> = Vec::new();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut next_sentence: BTreeMap<&str, usize> = BTreeMap::new();
    for passage in &store.passages {
        let doc_pos = *index.entry(passage.doc_id.as_str()).or_insert_with(|| {
            docs.push(AnnotatedDoc {
                doc_id: passage.doc_id.clone(),
                source: match passage.source_kind {
                    SourceKind::Web => BlockSource::Web,
                    SourceKind::PdfText => BlockSource::Pdf,
                },
                passages: Vec::new(),
            });
            docs.len() - 1
        });
        let base = next_sentence.entry(passage.doc_id.as_str()).or_insert(0);
        let mut sentences = splitter.split(&passage.text);
        for sentence in &mut sentences {
            sentence.doc_id = passage.doc_id.clone();
            sentence.index += *base;
        }
        *base += sentences.len();
        let spans = sentences.iter().map(|s| match_terms(s, lexicon)).collect();
        docs[doc_pos].passages.push(AnnotatedPassage { sentences, spans });
    }
    docs
}

/// Context blocks for every annotated document, neighbors drawn within each
/// passage only.
pub fn blocks_for_docs(docs: &[AnnotatedDoc], lexicon: &Lexicon) -> Vec<ContextBlock> {
    let mut blocks = Vec::new();
    for doc in docs {
        for passage in &doc.passages {
            blocks.extend(build_blocks(&passage.sentences, &passage.spans, doc.source, lexicon));
        }
    }
    blocks
}

/// Splits retained blocks by source for the scheme machinery.
pub fn partition_by_source(blocks: Vec<ContextBlock>) -> (Vec<ContextBlock>, Vec<ContextBlock>) {
    blocks.into_iter().partition(|b| b.source == BlockSource::Web)
}

pub struct TrainedModel {
    pub kind: ModelKind,
    pub model: TaggerModel,
    pub history: Vec<EpochStats>,
}

/// Per-(model, scheme) evaluation counts at both levels.
#[derive(Debug, Clone, Default)]
pub struct EvalCounts {
    pub token: PairCounts,
    pub entity: PairCounts,
}

pub struct PipelineRun {
    pub lexicon_version: String,
    pub block_count: usize,
    pub retained_count: usize,
    pub split: SplitResult,
    pub models: Vec<TrainedModel>,
    pub cells: Vec<MetricCell>,
    pub candidates: Vec<CandidateTerm>,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Tagger(#[from] TaggerError),
    #[error(transparent)]
    Bio(#[from] crate::annotate::BioError),
}

pub struct PipelineInputs<'a> {
    pub store: &'a CorpusStore,
    pub lexicon: &'a Lexicon,
    pub embeddings: &'a EmbeddingStore,
    pub threshold: f64,
    pub scheme_id: u8,
    pub seed: u64,
    pub models: Vec<ModelKind>,
    pub cnn: CnnConfig,
    pub train: TrainConfig,
    pub dev_fraction: f64,
    pub seed_keywords: Vec<String>,
}

/// Runs annotate → blocks → gate → split → train → tag → extract → eval over
/// in-memory inputs. Stage seeds derive from the master seed, so individual
/// stage reruns reproduce the same artifacts.
pub fn run_pipeline(inputs: &PipelineInputs) -> Result<PipelineRun, PipelineError> {
    let splitter = SentenceSplitter::new();
    let docs = annotate_store(inputs.store, inputs.lexicon, &splitter);
    let mut blocks = blocks_for_docs(&docs, inputs.lexicon);
    let retained = filter_blocks(&mut blocks, inputs.embeddings, inputs.threshold);
    let block_count = blocks.len();
    let retained_count = retained.len();

    let (web, pdf) = partition_by_source(retained);
    let split_seed = Rng::new(inputs.seed).derive("split").next_u64();
    let scheme = SplitScheme::table_row(inputs.scheme_id, split_seed)?;
    let split = split_dataset(web, pdf, &scheme, inputs.lexicon)?;

    let train_sequences = blocks_to_sequences(&split.train)?;
    let test_sequences = blocks_to_sequences(&split.test)?;

    let mut models = Vec::new();
    let mut cells = Vec::new();
    let mut candidates = Vec::new();
    for kind in &inputs.models {
        let mut cfg = inputs.train.clone();
        cfg.rng_seed = Rng::new(inputs.seed).derive(&format!("train:{kind}")).next_u64();
        let dev_seed = Rng::new(inputs.seed).derive(&format!("dev:{kind}")).next_u64();
        let (train_part, dev_part) =
            crate::tagger::train::carve_dev(train_sequences.clone(), inputs.dev_fraction, dev_seed);
        let (model, history) = train(*kind, &train_part, &dev_part, &inputs.cnn, &cfg)?;

        let predictions: Vec<Vec<BioLabel>> = test_sequences
            .iter()
            .map(|seq| model.predict(&seq.tokens))
            .collect();
        let counts = evaluate_predictions(&test_sequences, &predictions);
        let (tp, tr, _) = counts.token.prf();
        let (ep, er, _) = counts.entity.prf();
        cells.push(MetricCell::new(kind.as_str(), inputs.scheme_id, tp, tr, MetricLevel::Token));
        cells.push(MetricCell::new(kind.as_str(), inputs.scheme_id, ep, er, MetricLevel::Entity));

        candidates.extend(extract_candidates_for_blocks(
            &split.test,
            &predictions,
            inputs.lexicon,
            inputs.embeddings,
            &inputs.seed_keywords,
            inputs.threshold,
            kind.as_str(),
            inputs.scheme_id,
        ));
        models.push(TrainedModel { kind: *kind, model, history });
    }

    Ok(PipelineRun {
        lexicon_version: inputs.lexicon.version().to_string(),
        block_count,
        retained_count,
        split,
        models,
        cells,
        candidates,
    })
}

pub fn evaluate_predictions(gold: &[Sequence], predictions: &[Vec<BioLabel>]) -> EvalCounts {
    let mut counts = EvalCounts::default();
    for (seq, pred) in gold.iter().zip(predictions) {
        counts
            .token
            .add(token_counts(pred, &seq.labels, true).expect("aligned sequences"));
        counts
            .entity
            .add(entity_counts_from_labels(pred, &seq.labels, true).expect("aligned sequences"));
    }
    counts
}

/// Maps block-level predictions back to their sentences and runs the
/// candidate gates.
#[allow(clippy::too_many_arguments)]
pub fn extract_candidates_for_blocks(
    blocks: &[ContextBlock],
    predictions: &[Vec<BioLabel>],
    lexicon: &Lexicon,
    store: &EmbeddingStore,
    seed_keywords: &[String],
    threshold: f64,
    model_id: &str,
    scheme_id: u8,
) -> Vec<CandidateTerm> {
    let mut pairs: Vec<(&Sentence, &[BioLabel])> = Vec::new();
    for (block, labels) in blocks.iter().zip(predictions) {
        let mut cursor = 0;
        for sentence in &block.sentences {
            let take = sentence.tokens.len();
            if cursor + take > labels.len() {
                break;
            }
            pairs.push((sentence, &labels[cursor..cursor + take]));
            cursor += take;
        }
    }
    collect_candidates(&pairs, lexicon, store, seed_keywords, threshold, model_id, scheme_id)
}

#[cfg(test)]
mod tests {
    use std::io::Cursor;

    use crate::ingest::{ingest, FilterRules, LanguageIdentifier};
    use crate::normalize::Normalizer;
    use crate::synth::{generate, SynthConfig};

    use super::*;

    #[test]
    fn annotate_and_block_small_synthetic_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = generate(&SynthConfig {
            web_docs: 6,
            pdf_docs: 4,
            ..Default::default()
        });
        corpus.write_to(dir.path()).unwrap();
        let manifest = corpus.manifest(&dir.path().join("docs"));
        let store = ingest(&manifest, &FilterRules::default(), &LanguageIdentifier::bundled())
            .unwrap();
        assert!(store.skipped.is_empty(), "skipped: {:?}", store.skipped);
        assert!(!store.passages.is_empty());

        let lexicon =
            Lexicon::load(Cursor::new(corpus.lexicon_tsv.as_bytes()), Normalizer::new()).unwrap();
        let docs = annotate_store(&store, &lexicon, &SentenceSplitter::new());
        assert_eq!(docs.len(), 10);
        let mut blocks = blocks_for_docs(&docs, &lexicon);
        assert!(!blocks.is_empty());

        let embeddings =
            EmbeddingStore::load(Cursor::new(corpus.embeddings_txt.as_bytes())).unwrap();
        let retained = filter_blocks(&mut blocks, &embeddings, 0.5);
        // The synthetic embedding geometry keeps term blocks above the gate.
        assert_eq!(retained.len(), blocks.len());
    }
}
