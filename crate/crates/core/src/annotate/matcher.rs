//! Longest-match detection of lexicon terms in a sentence.
//!
//! A shorter match nested inside a longer one is suppressed, so "innovation"
//! never fires inside "innovation technology". Partially overlapping matches
//! of distinct terms merge into a single macro-term span covering their
//! union.

use crate::lexicon::Lexicon;

use super::{Sentence, TermSpan};

pub fn match_terms(sentence: &Sentence, lexicon: &Lexicon) -> Vec<TermSpan> {
    let max_len = lexicon.max_term_tokens();
    if max_len == 0 || sentence.tokens.is_empty() {
        return Vec::new();
    }
    let normalizer = lexicon.normalizer();
    let norm: Vec<String> = sentence
        .tokens
        .iter()
        .map(|t| normalizer.normalize_token(t))
        .collect();

    // Collect every lexicon match, any length, any position.
    let token_count = norm.len();
    let mut matches: Vec<(usize, usize, String)> = Vec::new();
    for start in 0..token_count {
        let mut candidate = String::new();
        for end in start + 1..=token_count.min(start + max_len) {
            if norm[end - 1].is_empty() {
                break; // tokens that fold away can never extend a term
            }
            if end - 1 > start {
                candidate.push(' ');
            }
            candidate.push_str(&norm[end - 1]);
            if lexicon.contains(&candidate) {
                matches.push((start, end, candidate.clone()));
            }
        }
    }

    // Longest-match exclusivity: drop matches strictly nested in another.
    let kept: Vec<&(usize, usize, String)> = matches
        .iter()
        .filter(|(s, e, _)| {
            !matches
                .iter()
                .any(|(s2, e2, _)| s2 <= s && e <= e2 && (e2 - s2) > (e - s))
        })
        .collect();

    // Coalesce partial overlaps into macro spans.
    let mut sorted = kept;
    sorted.sort_by_key(|(s, e, _)| (*s, *e));
    let mut spans: Vec<TermSpan> = Vec::new();
    let mut group: Vec<&(usize, usize, String)> = Vec::new();
    let mut group_end = 0;
    for m in sorted {
        if group.is_empty() || m.0 >= group_end {
            flush_group(&mut spans, &group, group_end, lexicon);
            group = vec![m];
            group_end = m.1;
        } else {
            group_end = group_end.max(m.1);
            group.push(m);
        }
    }
    flush_group(&mut spans, &group, group_end, lexicon);
    spans
}

fn flush_group(
    spans: &mut Vec<TermSpan>,
    group: &[&(usize, usize, String)],
    group_end: usize,
    lexicon: &Lexicon,
) {
    match group {
        [] => {}
        [(start, end, canonical)] => {
            let category = lexicon
                .get(canonical)
                .expect("matched canonical present in lexicon")
                .category;
            spans.push(TermSpan::term(*start, *end, category, canonical));
        }
        _ => {
            let start = group[0].0;
            let canonicals = group.iter().map(|(_, _, c)| c.clone()).collect();
            spans.push(TermSpan::macro_term(start, group_end, canonicals));
        }
    }
}
