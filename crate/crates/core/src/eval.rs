//! Precision / recall / F1 at token and entity level, and the two report
//! layouts: the per-scheme metric table and the acceptance-rate table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::annotate::{from_bio, BioLabel, SpanLabel};
use crate::extract::AcceptanceCell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricLevel {
    Token,
    Entity,
}

impl MetricLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricLevel::Token => "token",
            MetricLevel::Entity => "entity",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("prediction has {pred} labels but gold has {gold}")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("line {line}: malformed report row")]
    BadReportRow { line: usize },
}

/// Harmonic mean; zero when both inputs vanish.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Micro-average tallies. `matched` counts agreements on the positive class,
/// `pred` and `gold` the positive totals on each side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairCounts {
    pub matched: usize,
    pub pred: usize,
    pub gold: usize,
}

impl PairCounts {
    pub fn add(&mut self, other: PairCounts) {
        self.matched += other.matched;
        self.pred += other.pred;
        self.gold += other.gold;
    }

    pub fn precision(&self) -> f64 {
        if self.pred == 0 {
            0.0
        } else {
            self.matched as f64 / self.pred as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            0.0
        } else {
            self.matched as f64 / self.gold as f64
        }
    }

    pub fn prf(&self) -> (f64, f64, f64) {
        let p = self.precision();
        let r = self.recall();
        (p, r, f1_score(p, r))
    }
}

fn effective(label: BioLabel, include_mac: bool) -> BioLabel {
    if !include_mac && label.label() == Some(SpanLabel::Macro) {
        BioLabel::O
    } else {
        label
    }
}

/// Token-level counts over non-O classes.
pub fn token_counts(
    pred: &[BioLabel],
    gold: &[BioLabel],
    include_mac: bool,
) -> Result<PairCounts, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch { pred: pred.len(), gold: gold.len() });
    }
    let mut counts = PairCounts::default();
    for (p, g) in pred.iter().zip(gold) {
        let p = effective(*p, include_mac);
        let g = effective(*g, include_mac);
        if !p.is_outside() {
            counts.pred += 1;
            if p == g {
                counts.matched += 1;
            }
        }
        if !g.is_outside() {
            counts.gold += 1;
        }
    }
    Ok(counts)
}

pub fn token_metrics(pred: &[BioLabel], gold: &[BioLabel]) -> Result<(f64, f64, f64), EvalError> {
    Ok(token_counts(pred, gold, true)?.prf())
}

/// Entity-level counts: exact `(start, end, label)` agreement.
pub fn entity_counts(
    pred: &[(usize, usize, SpanLabel)],
    gold: &[(usize, usize, SpanLabel)],
    include_mac: bool,
) -> PairCounts {
    let keep = |spans: &[(usize, usize, SpanLabel)]| -> Vec<(usize, usize, SpanLabel)> {
        spans
            .iter()
            .filter(|(_, _, l)| include_mac || *l != SpanLabel::Macro)
            .copied()
            .collect()
    };
    let pred = keep(pred);
    let gold = keep(gold);
    let matched = pred.iter().filter(|span| gold.contains(span)).count();
    PairCounts { matched, pred: pred.len(), gold: gold.len() }
}

pub fn entity_metrics(
    pred: &[(usize, usize, SpanLabel)],
    gold: &[(usize, usize, SpanLabel)],
) -> (f64, f64, f64) {
    entity_counts(pred, gold, true).prf()
}

/// Entity counts straight from label sequences.
pub fn entity_counts_from_labels(
    pred: &[BioLabel],
    gold: &[BioLabel],
    include_mac: bool,
) -> Result<PairCounts, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch { pred: pred.len(), gold: gold.len() });
    }
    Ok(entity_counts(&from_bio(pred), &from_bio(gold), include_mac))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub model_id: String,
    pub scheme_id: u8,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub level: MetricLevel,
}

impl MetricCell {
    /// F1 is always derived from precision and recall, never stored apart.
    pub fn new(
        model_id: &str,
        scheme_id: u8,
        precision: f64,
        recall: f64,
        level: MetricLevel,
    ) -> MetricCell {
        MetricCell {
            model_id: model_id.to_string(),
            scheme_id,
            precision,
            recall,
            f1: f1_score(precision, recall),
            level,
        }
    }
}

const SCHEME_IDS: [u8; 4] = [1, 2, 3, 4];

/// Pretty metric table: one block per measure, scheme columns 1..4 plus the
/// row mean, four decimals.
pub fn render_metric_table(cells: &[MetricCell]) -> String {
    let mut models: Vec<&str> = Vec::new();
    for cell in cells {
        if !models.contains(&cell.model_id.as_str()) {
            models.push(&cell.model_id);
        }
    }
    let lookup = |model: &str, scheme: u8| -> Option<&MetricCell> {
        cells
            .iter()
            .find(|c| c.model_id == model && c.scheme_id == scheme)
    };

    let mut out = String::new();
    for (title, get) in [
        ("Précision", &(|c: &MetricCell| c.precision) as &dyn Fn(&MetricCell) -> f64),
        ("Rappel", &|c: &MetricCell| c.recall),
        ("F1-Score", &|c: &MetricCell| c.f1),
    ] {
        writeln!(out, "{title}").unwrap();
        write!(out, "Modèle").unwrap();
        for id in SCHEME_IDS {
            write!(out, "\tJeu de données {id}").unwrap();
        }
        writeln!(out, "\tMoyenne").unwrap();
        for model in &models {
            write!(out, "{model}").unwrap();
            let mut values = Vec::new();
            for scheme in SCHEME_IDS {
                match lookup(model, scheme) {
                    Some(cell) => {
                        let v = get(cell);
                        values.push(v);
                        write!(out, "\t{v:.4}").unwrap();
                    }
                    None => write!(out, "\t-").unwrap(),
                }
            }
            if values.is_empty() {
                writeln!(out, "\t-").unwrap();
            } else {
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                writeln!(out, "\t{mean:.4}").unwrap();
            }
        }
        writeln!(out).unwrap();
    }
    out
}

/// Acceptance-rate table: candidate counts with expert acceptance percentages
/// and the per-model mean rate.
pub fn render_acceptance_table(cells: &[AcceptanceCell]) -> String {
    let mut models: Vec<&str> = Vec::new();
    for cell in cells {
        if !models.contains(&cell.model_id.as_str()) {
            models.push(&cell.model_id);
        }
    }
    let mut out = String::new();
    write!(out, "Modèle").unwrap();
    for id in SCHEME_IDS {
        write!(out, "\tJdd {id} (%)").unwrap();
    }
    writeln!(out, "\t% Moyenne").unwrap();
    for model in &models {
        write!(out, "{model}").unwrap();
        let mut rates = Vec::new();
        for scheme in SCHEME_IDS {
            match cells
                .iter()
                .find(|c| c.model_id == *model && c.scheme_id == scheme)
            {
                Some(cell) => match cell.rate() {
                    Some(rate) => {
                        rates.push(rate);
                        write!(out, "\t{} ({rate:.2}%)", cell.total).unwrap();
                    }
                    None => write!(out, "\t{} (-)", cell.total).unwrap(),
                },
                None => write!(out, "\t-").unwrap(),
            }
        }
        if rates.is_empty() {
            writeln!(out, "\t-").unwrap();
        } else {
            let mean = rates.iter().sum::<f64>() / rates.len() as f64;
            writeln!(out, "\t{mean:.2}%").unwrap();
        }
    }
    out
}

/// Machine-readable companion: full-precision floats, one cell per line.
pub fn write_report_tsv<W: std::io::Write>(
    mut w: W,
    cells: &[MetricCell],
) -> std::io::Result<()> {
    writeln!(w, "level\tmodel\tscheme\tprecision\trecall\tf1")?;
    for c in cells {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            c.level.as_str(),
            c.model_id,
            c.scheme_id,
            c.precision,
            c.recall,
            c.f1
        )?;
    }
    Ok(())
}

pub fn parse_report_tsv(text: &str) -> Result<Vec<MetricCell>, EvalError> {
    let mut cells = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let bad = || EvalError::BadReportRow { line: idx + 1 };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(bad());
        }
        let level = match cols[0] {
            "token" => MetricLevel::Token,
            "entity" => MetricLevel::Entity,
            _ => return Err(bad()),
        };
        cells.push(MetricCell {
            model_id: cols[1].to_string(),
            scheme_id: cols[2].parse().map_err(|_| bad())?,
            precision: cols[3].parse().map_err(|_| bad())?,
            recall: cols[4].parse().map_err(|_| bad())?,
            f1: cols[5].parse().map_err(|_| bad())?,
            level,
        })
    }
    Ok(cells)
}

/// Evaluates imported CoNLL sequences (third column = predicted labels) at
/// both levels, keyed however the caller grouped them.
pub fn evaluate_sequences(
    pairs: &[(&[BioLabel], &[BioLabel])],
    include_mac: bool,
) -> Result<BTreeMap<&'static str, PairCounts>, EvalError> {
    let mut token = PairCounts::default();
    let mut entity = PairCounts::default();
    for (pred, gold) in pairs {
        token.add(token_counts(pred, gold, include_mac)?);
        entity.add(entity_counts_from_labels(pred, gold, include_mac)?);
    }
    let mut out = BTreeMap::new();
    out.insert("token", token);
    out.insert("entity", entity);
    Ok(out)
}
