//! The line-oriented `<phrase>`/`<mot>` annotation format.
//!
//! One sentence per line. A span-bearing sentence renders as
//!
//! ```text
//! <phrase category='Digital transformation' values='virtual reality'> ...
//!   <mot category='Digital transformation'>virtual reality</mot> ...</phrase>
//! ```
//!
//! Attribute values are single-quoted with `&` → `&amp;`, `<` → `&lt;` and
//! `'` → `&apos;`; text content escapes `&` and `<`. `parse_annotation`
//! inverts `emit_annotation` byte for byte.

use crate::normalize::Normalizer;

use super::tokenize::tokenize;
use super::{Sentence, SpanLabel, TermSpan};

pub fn emit_annotation(sentence: &Sentence, spans: &[TermSpan]) -> String {
    let mut sorted: Vec<&TermSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));

    if sorted.is_empty() {
        return format!("<phrase>{}</phrase>", escape_text(&sentence.text));
    }

    let values: Vec<&str> = sorted
        .iter()
        .flat_map(|s| s.canonicals.iter().map(String::as_str))
        .collect();
    let mut out = format!(
        "<phrase category='{}' values='{}'>",
        escape_attr(sorted[0].label.annotation_label()),
        escape_attr(&values.join("; "))
    );

    let mut cursor = 0;
    for span in &sorted {
        let (byte_start, byte_end) = (
            sentence.offsets[span.start].0,
            sentence.offsets[span.end - 1].1,
        );
        out.push_str(&escape_text(&sentence.text[cursor..byte_start]));
        out.push_str(&format!(
            "<mot category='{}'>{}</mot>",
            escape_attr(span.label.annotation_label()),
            escape_text(&sentence.text[byte_start..byte_end])
        ));
        cursor = byte_end;
    }
    out.push_str(&escape_text(&sentence.text[cursor..]));
    out.push_str("</phrase>");
    out
}

fn escape_text(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;")
}

fn escape_attr(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('\'', "&apos;")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let known = [
            ("&amp;", '&'),
            ("&lt;", '<'),
            ("&gt;", '>'),
            ("&apos;", '\''),
            ("&quot;", '"'),
        ];
        match known.iter().find(|(ent, _)| rest.starts_with(ent)) {
            Some((ent, c)) => {
                out.push(*c);
                rest = &rest[ent.len()..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum AnnotationParseError {
    #[error("position {position}: expected {expected}")]
    Syntax { position: usize, expected: &'static str },
    #[error("position {position}: unbalanced tags")]
    Unbalanced { position: usize },
    #[error("position {position}: nested <mot>")]
    NestedMot { position: usize },
    #[error("position {position}: unknown category label {label:?}")]
    UnknownCategory { position: usize, label: String },
    #[error("position {position}: <mot> holds no tokens")]
    EmptyMot { position: usize },
    #[error("values attribute lists {values} canonicals for {spans} spans")]
    ValuesMismatch { values: usize, spans: usize },
}

struct Cursor<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str, what: &'static str) -> Result<(), AnnotationParseError> {
        if self.eat(lit) {
            Ok(())
        } else {
            Err(AnnotationParseError::Syntax { position: self.pos, expected: what })
        }
    }

    fn skip_spaces(&mut self) {
        while self.rest().starts_with(' ') {
            self.pos += 1;
        }
    }

    /// Parses `name='value' ...` pairs up to (and consuming) `>`.
    fn attributes(&mut self) -> Result<Vec<(String, String)>, AnnotationParseError> {
        let mut attrs = Vec::new();
        loop {
            self.skip_spaces();
            if self.eat(">") {
                return Ok(attrs);
            }
            let name_len = self
                .rest()
                .find(|c: char| !c.is_ascii_alphanumeric() && c != '_' && c != '-')
                .unwrap_or(self.rest().len());
            if name_len == 0 {
                return Err(AnnotationParseError::Syntax {
                    position: self.pos,
                    expected: "attribute name or '>'",
                });
            }
            let name = self.rest()[..name_len].to_string();
            self.pos += name_len;
            self.expect("='", "=' after attribute name")?;
            let value_len = self.rest().find('\'').ok_or(AnnotationParseError::Syntax {
                position: self.pos,
                expected: "closing ' for attribute value",
            })?;
            let value = unescape(&self.rest()[..value_len]);
            self.pos += value_len + 1;
            attrs.push((name, value));
        }
    }

    /// Raw text up to the next `<` (or end of input).
    fn text_segment(&mut self) -> &'a str {
        let len = self.rest().find('<').unwrap_or(self.rest().len());
        let seg = &self.rest()[..len];
        self.pos += len;
        seg
    }
}

/// Inverse of `emit_annotation`. Returns the reconstructed sentence (no
/// document provenance) and its spans.
pub fn parse_annotation(line: &str) -> Result<(Sentence, Vec<TermSpan>), AnnotationParseError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let mut cur = Cursor { input: line, pos: 0 };
    cur.expect("<phrase", "<phrase")?;
    let attr_pos = cur.pos;
    let attrs = cur.attributes()?;
    let mut values: Option<Vec<String>> = None;
    for (name, value) in &attrs {
        match name.as_str() {
            "category" => {
                if SpanLabel::from_annotation_label(value).is_none() {
                    return Err(AnnotationParseError::UnknownCategory {
                        position: attr_pos,
                        label: value.clone(),
                    });
                }
            }
            "values" => {
                values = Some(value.split("; ").map(str::to_string).collect());
            }
            _ => {
                return Err(AnnotationParseError::Syntax {
                    position: attr_pos,
                    expected: "category or values attribute",
                })
            }
        }
    }

    let mut text = String::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut offsets: Vec<(usize, usize)> = Vec::new();
    // (token_start, token_end, label) per <mot>
    let mut mots: Vec<(usize, usize, SpanLabel)> = Vec::new();

    let append_segment = |text: &mut String,
                              tokens: &mut Vec<String>,
                              offsets: &mut Vec<(usize, usize)>,
                              raw: &str| {
        let unescaped = unescape(raw);
        let base = text.len();
        let (segment_tokens, segment_offsets) = tokenize(&unescaped);
        tokens.extend(segment_tokens);
        offsets.extend(segment_offsets.iter().map(|(s, e)| (base + s, base + e)));
        text.push_str(&unescaped);
    };

    loop {
        let seg = cur.text_segment();
        append_segment(&mut text, &mut tokens, &mut offsets, seg);
        if cur.rest().is_empty() {
            return Err(AnnotationParseError::Unbalanced { position: cur.pos });
        }
        if cur.eat("</phrase>") {
            break;
        }
        if cur.eat("<mot") {
            let mot_pos = cur.pos;
            let mot_attrs = cur.attributes()?;
            let label = match mot_attrs.iter().find(|(n, _)| n == "category") {
                Some((_, v)) => SpanLabel::from_annotation_label(v).ok_or_else(|| {
                    AnnotationParseError::UnknownCategory {
                        position: mot_pos,
                        label: v.clone(),
                    }
                })?,
                None => {
                    return Err(AnnotationParseError::Syntax {
                        position: mot_pos,
                        expected: "category attribute on <mot>",
                    })
                }
            };
            let token_start = tokens.len();
            let inner = cur.text_segment();
            append_segment(&mut text, &mut tokens, &mut offsets, inner);
            if cur.rest().starts_with("<mot") {
                return Err(AnnotationParseError::NestedMot { position: cur.pos });
            }
            if !cur.eat("</mot>") {
                return Err(AnnotationParseError::Unbalanced { position: cur.pos });
            }
            if tokens.len() == token_start {
                return Err(AnnotationParseError::EmptyMot { position: mot_pos });
            }
            mots.push((token_start, tokens.len(), label));
        } else if cur.eat("</mot>") {
            return Err(AnnotationParseError::Unbalanced { position: cur.pos });
        } else {
            return Err(AnnotationParseError::Syntax {
                position: cur.pos,
                expected: "<mot>, </phrase>, or text",
            });
        }
    }
    if !cur.rest().trim().is_empty() {
        return Err(AnnotationParseError::Syntax {
            position: cur.pos,
            expected: "end of line after </phrase>",
        });
    }

    let spans = assign_canonicals(&mots, values, |start, end| {
        let slice_start = offsets[start].0;
        let slice_end = offsets[end - 1].1;
        Normalizer::new().normalize_term(&text[slice_start..slice_end])
    })?;

    let sentence = Sentence {
        doc_id: String::new(),
        index: 0,
        start: 0,
        text,
        tokens,
        offsets,
    };
    Ok((sentence, spans))
}

/// Distributes the `values` list over the spans: plain spans take one entry;
/// a macro span takes what the remaining spans do not need (at least two).
/// Without a `values` attribute, canonicals fall back to the normalized span
/// surface.
fn assign_canonicals(
    mots: &[(usize, usize, SpanLabel)],
    values: Option<Vec<String>>,
    surface_canonical: impl Fn(usize, usize) -> String,
) -> Result<Vec<TermSpan>, AnnotationParseError> {
    let mut spans = Vec::with_capacity(mots.len());
    match values {
        None => {
            for &(start, end, label) in mots {
                spans.push(TermSpan {
                    start,
                    end,
                    label,
                    canonicals: vec![surface_canonical(start, end)],
                });
            }
        }
        Some(entries) => {
            let min_needed = |rest: &[(usize, usize, SpanLabel)]| -> usize {
                rest.iter()
                    .map(|(_, _, l)| if *l == SpanLabel::Macro { 2 } else { 1 })
                    .sum()
            };
            let mismatch = AnnotationParseError::ValuesMismatch {
                values: entries.len(),
                spans: mots.len(),
            };
            let mut remaining = entries.as_slice();
            for (i, &(start, end, label)) in mots.iter().enumerate() {
                let take = match label {
                    SpanLabel::Macro => {
                        let rest = min_needed(&mots[i + 1..]);
                        remaining.len().checked_sub(rest).ok_or(mismatch.clone())?
                    }
                    SpanLabel::Category(_) => 1,
                };
                let min_take = if label == SpanLabel::Macro { 2 } else { 1 };
                if take < min_take || take > remaining.len() {
                    return Err(mismatch);
                }
                spans.push(TermSpan {
                    start,
                    end,
                    label,
                    canonicals: remaining[..take].to_vec(),
                });
                remaining = &remaining[take..];
            }
            if !remaining.is_empty() {
                return Err(mismatch);
            }
        }
    }
    Ok(spans)
}
