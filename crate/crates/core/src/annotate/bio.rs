//! BIO label conversion and the CoNLL-style TSV exchange format.
//!
//! Tokens outside any span are `O`; tokens inside are `I-<code>`. When a span
//! starts on the token immediately after a span with the same category code,
//! its first token is `B-<code>` instead, marking the new entity.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Sentence, SpanLabel, TermSpan};

/// Serializes as its rendered form (`O`, `I-dig`, `B-mac`, …).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BioLabel {
    O,
    In(SpanLabel),
    Begin(SpanLabel),
}

impl Serialize for BioLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BioLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl BioLabel {
    pub fn label(self) -> Option<SpanLabel> {
        match self {
            BioLabel::O => None,
            BioLabel::In(l) | BioLabel::Begin(l) => Some(l),
        }
    }

    pub fn is_outside(self) -> bool {
        self == BioLabel::O
    }
}

impl fmt::Display for BioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioLabel::O => f.write_str("O"),
            BioLabel::In(l) => write!(f, "I-{}", l.code()),
            BioLabel::Begin(l) => write!(f, "B-{}", l.code()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BioError {
    #[error("spans overlap at token {token}")]
    Overlap { token: usize },
    #[error("span [{start}, {end}) exceeds sentence length {len}")]
    OutOfBounds { start: usize, end: usize, len: usize },
    #[error("unknown BIO label {0:?}")]
    BadLabel(String),
}

impl FromStr for BioLabel {
    type Err = BioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(BioLabel::O);
        }
        let bad = || BioError::BadLabel(s.to_string());
        let (prefix, code) = s.split_once('-').ok_or_else(bad)?;
        let label = SpanLabel::from_code(code).ok_or_else(bad)?;
        match prefix {
            "I" => Ok(BioLabel::In(label)),
            "B" => Ok(BioLabel::Begin(label)),
            _ => Err(bad()),
        }
    }
}

/// Labels every token of the sentence. Spans must be sorted and
/// non-overlapping (macro coalescing has already run).
pub fn to_bio(sentence: &Sentence, spans: &[TermSpan]) -> Result<Vec<BioLabel>, BioError> {
    labels_for(sentence.tokens.len(), spans)
}

pub(crate) fn labels_for(len: usize, spans: &[TermSpan]) -> Result<Vec<BioLabel>, BioError> {
    let mut labels = vec![BioLabel::O; len];
    let mut sorted: Vec<&TermSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    let mut prev: Option<&TermSpan> = None;
    for span in sorted {
        if span.start >= span.end || span.end > len {
            return Err(BioError::OutOfBounds {
                start: span.start,
                end: span.end,
                len,
            });
        }
        if let Some(p) = prev {
            if span.start < p.end {
                return Err(BioError::Overlap { token: span.start });
            }
        }
        let begins_after_same = prev
            .map(|p| p.end == span.start && p.label == span.label)
            .unwrap_or(false);
        labels[span.start] = if begins_after_same {
            BioLabel::Begin(span.label)
        } else {
            BioLabel::In(span.label)
        };
        for slot in labels.iter_mut().take(span.end).skip(span.start + 1) {
            *slot = BioLabel::In(span.label);
        }
        prev = Some(span);
    }
    Ok(labels)
}

/// Reconstructs `(start, end, label)` spans from a BIO sequence.
pub fn from_bio(labels: &[BioLabel]) -> Vec<(usize, usize, SpanLabel)> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, SpanLabel)> = None;
    for (t, lab) in labels.iter().enumerate() {
        match lab {
            BioLabel::O => {
                if let Some((start, l)) = open.take() {
                    spans.push((start, t, l));
                }
            }
            BioLabel::Begin(l) => {
                if let Some((start, prev)) = open.take() {
                    spans.push((start, t, prev));
                }
                open = Some((t, *l));
            }
            BioLabel::In(l) => match open {
                Some((_, prev)) if prev == *l => {}
                _ => {
                    if let Some((start, prev)) = open.take() {
                        spans.push((start, t, prev));
                    }
                    open = Some((t, *l));
                }
            },
        }
    }
    if let Some((start, l)) = open {
        spans.push((start, labels.len(), l));
    }
    spans
}

/// Writes sequences as `token<TAB>label` lines with a blank line between
/// sequences. An optional `# id` comment precedes each sequence.
pub fn write_conll<W: Write>(
    mut w: W,
    sequences: &[(Option<&str>, &[String], &[BioLabel])],
) -> io::Result<()> {
    for (i, (id, tokens, labels)) in sequences.iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        if let Some(id) = id {
            writeln!(w, "# {id}")?;
        }
        for (tok, lab) in tokens.iter().zip(labels.iter()) {
            writeln!(w, "{tok}\t{lab}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct ConllSequence {
    pub id: Option<String>,
    pub tokens: Vec<String>,
    pub gold: Vec<BioLabel>,
    /// Third column, present in prediction exports.
    pub pred: Vec<BioLabel>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConllError {
    #[error("line {line}: {source}")]
    Label { line: usize, source: BioError },
    #[error("line {line}: expected token<TAB>label")]
    Shape { line: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads CoNLL-style sequences; tolerates a third predicted-label column.
pub fn read_conll<R: BufRead>(reader: R) -> Result<Vec<ConllSequence>, ConllError> {
    let mut sequences = Vec::new();
    let mut current = ConllSequence::default();
    let flush = |cur: &mut ConllSequence, out: &mut Vec<ConllSequence>| {
        if !cur.tokens.is_empty() {
            out.push(std::mem::take(cur));
        } else {
            *cur = ConllSequence::default();
        }
    };
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            flush(&mut current, &mut sequences);
            continue;
        }
        if let Some(rest) = line.strip_prefix("# ") {
            current.id = Some(rest.to_string());
            continue;
        }
        let mut cols = line.split('\t');
        let token = cols.next().ok_or(ConllError::Shape { line: line_no })?;
        let gold = cols.next().ok_or(ConllError::Shape { line: line_no })?;
        current.tokens.push(token.to_string());
        current.gold.push(
            gold.parse()
                .map_err(|source| ConllError::Label { line: line_no, source })?,
        );
        if let Some(pred) = cols.next() {
            current.pred.push(
                pred.parse()
                    .map_err(|source| ConllError::Label { line: line_no, source })?,
            );
        }
    }
    flush(&mut current, &mut sequences);
    Ok(sequences)
}

#[cfg(test)]
mod tests {
    use crate::lexicon::Category;

    use super::super::Sentence;
    use super::*;

    fn cat(c: Category) -> SpanLabel {
        SpanLabel::Category(c)
    }

    fn sentence(n: usize) -> Sentence {
        Sentence::from_text(&vec!["w"; n].join(" "))
    }

    #[test]
    fn plain_span() {
        let s = Sentence::from_text("we offer virtual reality sims");
        let spans = vec![TermSpan::term(2, 4, Category::Dig, "virtual reality")];
        let labels = to_bio(&s, &spans).unwrap();
        let rendered: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
        assert_eq!(rendered, vec!["O", "O", "I-dig", "I-dig", "O"]);
    }

    #[test]
    fn adjacent_same_category_gets_begin() {
        let spans = vec![
            TermSpan::term(0, 2, Category::Inn, "a b"),
            TermSpan::term(2, 4, Category::Inn, "c d"),
        ];
        let labels = labels_for(4, &spans).unwrap();
        let rendered: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
        assert_eq!(rendered, vec!["I-inn", "I-inn", "B-inn", "I-inn"]);
    }

    #[test]
    fn adjacent_different_category_stays_inside() {
        let spans = vec![
            TermSpan::term(0, 2, Category::Inn, "a b"),
            TermSpan::term(2, 4, Category::Dig, "c d"),
        ];
        let labels = labels_for(4, &spans).unwrap();
        let rendered: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
        assert_eq!(rendered, vec!["I-inn", "I-inn", "I-dig", "I-dig"]);
    }

    #[test]
    fn begin_never_without_same_code_predecessor() {
        let spans = vec![
            TermSpan::term(1, 2, Category::Sus, "x"),
            TermSpan::macro_term(2, 4, vec!["a".into(), "b".into()]),
            TermSpan::macro_term(4, 6, vec!["c".into(), "d".into()]),
        ];
        let labels = labels_for(7, &spans).unwrap();
        for (t, lab) in labels.iter().enumerate() {
            if let BioLabel::Begin(code) = lab {
                assert!(t > 0);
                assert_eq!(labels[t - 1].label(), Some(*code));
            }
        }
        let rendered: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
        assert_eq!(
            rendered,
            vec!["O", "I-sus", "I-mac", "I-mac", "B-mac", "I-mac", "O"]
        );
    }

    #[test]
    fn overlap_is_error() {
        let spans = vec![
            TermSpan::term(0, 3, Category::Inn, "a b c"),
            TermSpan::term(2, 4, Category::Dig, "c d"),
        ];
        assert!(matches!(labels_for(5, &spans), Err(BioError::Overlap { token: 2 })));
    }

    #[test]
    fn out_of_bounds_is_error() {
        let spans = vec![TermSpan::term(3, 6, Category::Inn, "x y z")];
        assert!(matches!(labels_for(4, &spans), Err(BioError::OutOfBounds { .. })));
    }

    #[test]
    fn round_trip_simple() {
        let s = sentence(6);
        let spans = vec![
            TermSpan::term(0, 2, Category::Inn, "a b"),
            TermSpan::term(2, 4, Category::Inn, "c d"),
            TermSpan::term(5, 6, Category::Cor, "e"),
        ];
        let labels = to_bio(&s, &spans).unwrap();
        let got = from_bio(&labels);
        let want: Vec<(usize, usize, SpanLabel)> = spans
            .iter()
            .map(|sp| (sp.start, sp.end, sp.label))
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn from_bio_splits_on_category_change() {
        let labels = vec![
            BioLabel::In(cat(Category::Inn)),
            BioLabel::In(cat(Category::Dig)),
            BioLabel::O,
        ];
        assert_eq!(
            from_bio(&labels),
            vec![(0, 1, cat(Category::Inn)), (1, 2, cat(Category::Dig))]
        );
    }

    #[test]
    fn label_parse_round_trip() {
        for s in ["O", "I-dig", "B-mac", "I-mac", "B-cor"] {
            let lab: BioLabel = s.parse().unwrap();
            assert_eq!(lab.to_string(), s);
        }
        assert!("I-xyz".parse::<BioLabel>().is_err());
        assert!("Q-dig".parse::<BioLabel>().is_err());
    }

    #[test]
    fn conll_round_trip() {
        let tokens: Vec<String> = ["we", "use", "open", "innovation"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let labels: Vec<BioLabel> = vec![
            BioLabel::O,
            BioLabel::O,
            BioLabel::In(cat(Category::Inn)),
            BioLabel::In(cat(Category::Inn)),
        ];
        let mut buf = Vec::new();
        write_conll(&mut buf, &[(Some("blk-1"), &tokens, &labels)]).unwrap();
        let seqs = read_conll(io::Cursor::new(buf)).unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0].id.as_deref(), Some("blk-1"));
        assert_eq!(seqs[0].tokens, tokens);
        assert_eq!(seqs[0].gold, labels);
        assert!(seqs[0].pred.is_empty());
    }
}
