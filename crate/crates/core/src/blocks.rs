//! Context blocks: five consecutive sentences centered on a term-bearing
//! sentence, gated by cosine similarity between the term and the block.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::annotate::{Sentence, TermSpan};
use crate::embed::{cosine, EmbeddingStore};
use crate::lexicon::{Category, Lexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockSource {
    Web,
    Pdf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBlock {
    pub block_id: String,
    pub doc_id: String,
    /// Up to five sentences in document order (fewer at document edges).
    pub sentences: Vec<Sentence>,
    /// Gold spans aligned with `sentences`.
    pub spans: Vec<Vec<TermSpan>>,
    /// Position of the term-bearing sentence within `sentences`.
    pub center_index: usize,
    /// Canonical form of the term that anchors the block.
    pub term: String,
    pub category: Category,
    pub source: BlockSource,
    /// Cosine similarity between term and block; set by `filter_blocks`.
    pub similarity: Option<f64>,
    /// Gate outcome, kept for audit alongside the similarity.
    pub retained: Option<bool>,
}

impl ContextBlock {
    /// All tokens of the block, in order.
    pub fn tokens(&self) -> Vec<&str> {
        self.sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
            .collect()
    }
}

/// One block per (term-bearing sentence, distinct term canonical) pair, with
/// up to two neighbor sentences per side. Macro spans anchor one block per
/// constituent term.
pub fn build_blocks(
    sentences: &[Sentence],
    spans: &[Vec<TermSpan>],
    source: BlockSource,
    lexicon: &Lexicon,
) -> Vec<ContextBlock> {
    assert_eq!(sentences.len(), spans.len());
    let mut blocks = Vec::new();
    for (center, sentence_spans) in spans.iter().enumerate() {
        let mut seen: Vec<&str> = Vec::new();
        for span in sentence_spans {
            for canonical in &span.canonicals {
                if seen.contains(&canonical.as_str()) {
                    continue;
                }
                seen.push(canonical);
                let Some(term) = lexicon.get(canonical) else {
                    continue; // constituent no longer in the lexicon
                };
                let lo = center.saturating_sub(2);
                let hi = (center + 3).min(sentences.len());
                let doc_id = sentences[center].doc_id.clone();
                blocks.push(ContextBlock {
                    block_id: format!(
                        "{}#{}#{}",
                        doc_id,
                        sentences[center].index,
                        canonical.replace(' ', "_")
                    ),
                    doc_id,
                    sentences: sentences[lo..hi].to_vec(),
                    spans: spans[lo..hi].to_vec(),
                    center_index: center - lo,
                    term: canonical.clone(),
                    category: term.category,
                    source,
                    similarity: None,
                    retained: None,
                });
            }
        }
    }
    blocks
}

/// Scores every block (similarity between the term vector and the block
/// vector) and returns those at or above the threshold. Every input block
/// keeps its similarity and gate outcome for audit.
pub fn filter_blocks(
    blocks: &mut [ContextBlock],
    store: &EmbeddingStore,
    threshold: f64,
) -> Vec<ContextBlock> {
    let mut retained = Vec::new();
    for block in blocks.iter_mut() {
        let term_tokens: Vec<&str> = block.term.split(' ').collect();
        let term_vec = store.phrase_vector(&term_tokens);
        let block_vec = store.phrase_vector(&block.tokens());
        let similarity = cosine(&term_vec, &block_vec).expect("store vectors share one dim");
        block.similarity = Some(similarity);
        let keep = similarity >= threshold;
        block.retained = Some(keep);
        if keep {
            retained.push(block.clone());
        }
    }
    retained
}

pub fn write_blocks<W: Write>(mut w: W, blocks: &[ContextBlock]) -> io::Result<()> {
    for block in blocks {
        serde_json::to_writer(&mut w, block)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_blocks<R: BufRead>(reader: R) -> io::Result<Vec<ContextBlock>> {
    let mut blocks = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        blocks.push(serde_json::from_str(&line)?);
    }
    Ok(blocks)
}
