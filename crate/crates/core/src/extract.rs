//! New-term extraction and the expert review loop.
//!
//! Predicted label runs become candidate terms after three gates: mono-terms
//! out, known lexicon entries out, and a cosine check against the seed
//! keywords plus the gold terms of the predicted category. Review decisions
//! append to a JSON-lines state file after every keystroke so an interrupted
//! session resumes without loss.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotate::{from_bio, BioLabel, Sentence, SpanLabel};
use crate::embed::{cosine, EmbeddingStore};
use crate::lexicon::{Category, Lexicon};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Occurrence {
    pub doc_id: String,
    pub sentence_index: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTerm {
    pub canonical: String,
    pub label: SpanLabel,
    pub token_count: usize,
    pub occurrences: Vec<Occurrence>,
    pub similarity: f64,
    pub model_id: String,
    pub scheme_id: u8,
}

/// Turns predicted BIO sequences into deduplicated, gated candidates, sorted
/// by canonical form.
pub fn collect_candidates(
    predictions: &[(&Sentence, &[BioLabel])],
    lexicon: &Lexicon,
    store: &EmbeddingStore,
    seed_keywords: &[String],
    threshold: f64,
    model_id: &str,
    scheme_id: u8,
) -> Vec<CandidateTerm> {
    let normalizer = lexicon.normalizer();
    // canonical → (occurrences, label votes)
    let mut grouped: BTreeMap<String, (BTreeSet<Occurrence>, BTreeMap<SpanLabel, usize>)> =
        BTreeMap::new();
    for (sentence, labels) in predictions {
        for (start, end, label) in from_bio(labels) {
            let surface = sentence.slice(start, end);
            let canonical = normalizer.normalize_term(surface);
            if canonical.split(' ').count() < 2 {
                continue; // mono-term
            }
            if lexicon.contains(&canonical) {
                continue; // already gold
            }
            let entry = grouped.entry(canonical).or_default();
            entry.0.insert(Occurrence {
                doc_id: sentence.doc_id.clone(),
                sentence_index: sentence.index,
                start,
                end,
            });
            *entry.1.entry(label).or_insert(0) += 1;
        }
    }

    let mut out = Vec::new();
    for (canonical, (occurrences, votes)) in grouped {
        let label = votes
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(l, _)| *l)
            .expect("at least one vote");
        let candidate_tokens: Vec<&str> = canonical.split(' ').collect();
        let candidate_vec = store.phrase_vector(&candidate_tokens);
        let reference_vec = store.phrase_vector(&reference_tokens(seed_keywords, lexicon, label));
        let similarity =
            cosine(&candidate_vec, &reference_vec).expect("store vectors share one dim");
        if similarity < threshold {
            continue;
        }
        out.push(CandidateTerm {
            token_count: candidate_tokens.len(),
            canonical,
            label,
            occurrences: occurrences.into_iter().collect(),
            similarity,
            model_id: model_id.to_string(),
            scheme_id,
        });
    }
    out
}

/// Seed keywords plus the gold terms of the candidate's category (all gold
/// terms for macro candidates).
fn reference_tokens(seed_keywords: &[String], lexicon: &Lexicon, label: SpanLabel) -> Vec<String> {
    let mut tokens: Vec<String> = seed_keywords.to_vec();
    for term in lexicon.terms() {
        let matches = match label {
            SpanLabel::Category(c) => term.category == c,
            SpanLabel::Macro => true,
        };
        if matches {
            tokens.extend(term.canonical.split(' ').map(str::to_string));
        }
    }
    tokens
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
    Deferred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub canonical: String,
    pub verdict: Verdict,
    pub reviewer: String,
    pub note: String,
    pub timestamp: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("state file {path}: line {line} is not a valid decision record")]
    CorruptState { path: PathBuf, line: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionSummary {
    pub accepted: usize,
    pub rejected: usize,
    pub deferred: usize,
    pub remaining: usize,
}

/// Single-user review over a persisted decision log. The log is append-only;
/// the latest decision per canonical wins.
#[derive(Debug)]
pub struct ReviewSession {
    candidates: Vec<CandidateTerm>,
    decisions: BTreeMap<String, ReviewDecision>,
    state_path: PathBuf,
}

impl ReviewSession {
    /// Opens a session, loading prior decisions. A malformed state file is an
    /// error; it is never silently reset.
    pub fn open(candidates: Vec<CandidateTerm>, state_path: &Path) -> Result<Self, ExtractError> {
        let mut decisions = BTreeMap::new();
        if state_path.exists() {
            let file = std::fs::File::open(state_path)?;
            for (idx, line) in io::BufReader::new(file).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let decision: ReviewDecision =
                    serde_json::from_str(&line).map_err(|_| ExtractError::CorruptState {
                        path: state_path.to_path_buf(),
                        line: idx + 1,
                    })?;
                decisions.insert(decision.canonical.clone(), decision);
            }
        }
        Ok(ReviewSession {
            candidates,
            decisions,
            state_path: state_path.to_path_buf(),
        })
    }

    pub fn candidates(&self) -> &[CandidateTerm] {
        &self.candidates
    }

    pub fn decisions(&self) -> impl Iterator<Item = &ReviewDecision> {
        self.decisions.values()
    }

    pub fn undecided(&self) -> Vec<&CandidateTerm> {
        self.candidates
            .iter()
            .filter(|c| !self.decisions.contains_key(&c.canonical))
            .collect()
    }

    /// Records one decision and flushes it to the state file immediately.
    pub fn record(&mut self, decision: ReviewDecision) -> Result<(), ExtractError> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.state_path)?;
        serde_json::to_writer(&mut file, &decision)?;
        writeln!(file)?;
        file.sync_data()?;
        self.decisions.insert(decision.canonical.clone(), decision);
        Ok(())
    }

    /// Applies a scripted decisions file (non-interactive replay).
    pub fn replay(&mut self, decisions: Vec<ReviewDecision>) -> Result<(), ExtractError> {
        for decision in decisions {
            self.record(decision)?;
        }
        Ok(())
    }

    /// Interactive loop: `a`ccept, `r`eject, `d`efer, `q`uit. End of input
    /// quits; every decision is persisted before the next prompt.
    pub fn run<R: BufRead, W: Write>(
        &mut self,
        mut input: R,
        mut output: W,
        reviewer: &str,
        contexts: &dyn Fn(&CandidateTerm) -> Vec<String>,
    ) -> Result<SessionSummary, ExtractError> {
        let pending: Vec<CandidateTerm> = self.undecided().into_iter().cloned().collect();
        let total = pending.len();
        for (i, candidate) in pending.iter().enumerate() {
            writeln!(
                output,
                "[{}/{}] {}  ({}, sim {:.3}, {} occurrence{})",
                i + 1,
                total,
                candidate.canonical,
                candidate.label.code(),
                candidate.similarity,
                candidate.occurrences.len(),
                if candidate.occurrences.len() == 1 { "" } else { "s" }
            )?;
            for ctx in contexts(candidate).iter().take(3) {
                writeln!(output, "    … {ctx}")?;
            }
            let verdict = loop {
                write!(output, "accept/reject/defer/quit [a/r/d/q]? ")?;
                output.flush()?;
                let mut line = String::new();
                if input.read_line(&mut line)? == 0 {
                    break None; // end of input: quit
                }
                match line.trim() {
                    "a" => break Some(Verdict::Accepted),
                    "r" => break Some(Verdict::Rejected),
                    "d" => break Some(Verdict::Deferred),
                    "q" => break None,
                    _ => continue,
                }
            };
            match verdict {
                Some(verdict) => self.record(ReviewDecision {
                    canonical: candidate.canonical.clone(),
                    verdict,
                    reviewer: reviewer.to_string(),
                    note: String::new(),
                    timestamp: unix_now(),
                })?,
                None => break,
            }
        }
        Ok(self.summary())
    }

    pub fn summary(&self) -> SessionSummary {
        let mut summary = SessionSummary::default();
        for candidate in &self.candidates {
            match self.decisions.get(&candidate.canonical).map(|d| d.verdict) {
                Some(Verdict::Accepted) => summary.accepted += 1,
                Some(Verdict::Rejected) => summary.rejected += 1,
                Some(Verdict::Deferred) => summary.deferred += 1,
                None => summary.remaining += 1,
            }
        }
        summary
    }

    /// Accepted candidates with a concrete category, ready for lexicon merge.
    /// Macro candidates need a human-assigned category and are not exported.
    pub fn accepted_for_merge(&self) -> Vec<(String, Category)> {
        self.candidates
            .iter()
            .filter(|c| {
                matches!(
                    self.decisions.get(&c.canonical).map(|d| d.verdict),
                    Some(Verdict::Accepted)
                )
            })
            .filter_map(|c| c.category().map(|cat| (c.canonical.clone(), cat)))
            .collect()
    }
}

impl CandidateTerm {
    pub fn category(&self) -> Option<Category> {
        match self.label {
            SpanLabel::Category(c) => Some(c),
            SpanLabel::Macro => None,
        }
    }
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// One acceptance-rate table cell: candidate volume and expert acceptance within a
/// (model, scheme) group. Deferred and undecided candidates count toward the
/// total but not toward the rate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceCell {
    pub model_id: String,
    pub scheme_id: u8,
    pub total: usize,
    pub accepted: usize,
    pub decided: usize,
}

impl AcceptanceCell {
    pub fn rate(&self) -> Option<f64> {
        if self.decided == 0 {
            None
        } else {
            Some(self.accepted as f64 / self.decided as f64 * 100.0)
        }
    }
}

pub fn acceptance_stats(
    candidates: &[CandidateTerm],
    decisions: &[ReviewDecision],
) -> Vec<AcceptanceCell> {
    let mut latest: BTreeMap<&str, &ReviewDecision> = BTreeMap::new();
    for decision in decisions {
        latest.insert(&decision.canonical, decision);
    }
    let mut cells: BTreeMap<(String, u8), AcceptanceCell> = BTreeMap::new();
    for candidate in candidates {
        let cell = cells
            .entry((candidate.model_id.clone(), candidate.scheme_id))
            .or_insert_with(|| AcceptanceCell {
                model_id: candidate.model_id.clone(),
                scheme_id: candidate.scheme_id,
                total: 0,
                accepted: 0,
                decided: 0,
            });
        cell.total += 1;
        match latest.get(candidate.canonical.as_str()).map(|d| d.verdict) {
            Some(Verdict::Accepted) => {
                cell.accepted += 1;
                cell.decided += 1;
            }
            Some(Verdict::Rejected) => cell.decided += 1,
            Some(Verdict::Deferred) | None => {}
        }
    }
    cells.into_values().collect()
}

pub fn write_candidates<W: Write>(mut w: W, candidates: &[CandidateTerm]) -> io::Result<()> {
    for candidate in candidates {
        serde_json::to_writer(&mut w, candidate)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_candidates<R: BufRead>(reader: R) -> io::Result<Vec<CandidateTerm>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn read_decisions<R: BufRead>(reader: R) -> io::Result<Vec<ReviewDecision>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
