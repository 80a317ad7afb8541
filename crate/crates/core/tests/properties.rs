//! Property tests for the invariants that hold over arbitrary inputs.

use proptest::prelude::*;

use lexiforge_core::annotate::{from_bio, split_sentences, tokenize, to_bio, Sentence, TermSpan};
use lexiforge_core::cvalue::cvalue_candidates;
use lexiforge_core::embed::cosine;
use lexiforge_core::ingest::{filter_url, FilterRules};
use lexiforge_core::lexicon::Category;
use lexiforge_core::normalize::Normalizer;

proptest! {
    /// Canonicalization reaches a fixpoint in one application, for any
    /// Unicode input.
    #[test]
    fn normalize_term_idempotent(s in "\\PC{0,60}") {
        let n = Normalizer::new();
        let once = n.normalize_term(&s);
        prop_assert_eq!(n.normalize_term(&once), once.clone());
        // And with a lemma table in play.
        let n = Normalizer::with_lemmas([("models", "model"), ("données", "donnée")]);
        let once = n.normalize_term(&s);
        prop_assert_eq!(n.normalize_term(&once), once);
    }

    #[test]
    fn cosine_symmetry_range_and_scale(
        u in prop::collection::vec(-100.0f64..100.0, 1..8),
        scale in 0.001f64..1000.0,
    ) {
        let v: Vec<f64> = u.iter().rev().map(|x| x * 0.5 + 1.0).collect();
        let ab = cosine(&u, &v).unwrap();
        let ba = cosine(&v, &u).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&ab));
        let scaled: Vec<f64> = u.iter().map(|x| x * scale).collect();
        let cs = cosine(&scaled, &v).unwrap();
        prop_assert!((cs - ab).abs() < 1e-9);
    }

    /// Token offsets slice back to the tokens and never overlap.
    #[test]
    fn tokenize_offsets_are_faithful(s in "[ a-zA-Z0-9.,!?'()-]{0,80}") {
        let (tokens, offsets) = tokenize(&s);
        prop_assert_eq!(tokens.len(), offsets.len());
        let mut last_end = 0;
        for (tok, (start, end)) in tokens.iter().zip(&offsets) {
            prop_assert!(start < end);
            prop_assert!(*start >= last_end);
            prop_assert_eq!(&s[*start..*end], tok.as_str());
            last_end = *end;
        }
    }

    /// Sentence slices plus the gaps reproduce the source document.
    #[test]
    fn sentence_offsets_rebuild_source(s in "[ a-zA-Z.!?\n]{0,120}") {
        let sentences = split_sentences(&s);
        let mut rebuilt = String::new();
        let mut cursor = 0;
        for sentence in &sentences {
            prop_assert!(sentence.start >= cursor);
            rebuilt.push_str(&s[cursor..sentence.start]);
            prop_assert_eq!(&s[sentence.start..sentence.start + sentence.text.len()],
                sentence.text.as_str());
            rebuilt.push_str(&sentence.text);
            cursor = sentence.start + sentence.text.len();
        }
        rebuilt.push_str(&s[cursor..]);
        prop_assert_eq!(rebuilt, s);
    }

    /// The URL filter is total and pure over arbitrary strings.
    #[test]
    fn filter_url_total_and_pure(s in "\\PC{0,50}") {
        let rules = FilterRules::default();
        let first = filter_url(&s, &rules);
        let second = filter_url(&s, &rules);
        prop_assert_eq!(first, second);
    }

    /// BIO conversion inverts for arbitrary valid span layouts.
    #[test]
    fn bio_round_trip(
        len in 1usize..16,
        seed_spans in prop::collection::vec((0usize..16, 1usize..4, 0usize..6), 0..5),
    ) {
        let tokens = vec!["w".to_string(); len];
        let sentence = Sentence::from_text(&tokens.join(" "));
        // Sort candidate spans and keep the non-overlapping prefix layout.
        let mut spans: Vec<TermSpan> = Vec::new();
        let mut cursor = 0usize;
        let mut sorted = seed_spans.clone();
        sorted.sort();
        for (start, width, cat) in sorted {
            let start = start.max(cursor);
            let end = start + width;
            if end > len {
                continue;
            }
            spans.push(TermSpan::term(start, end, Category::ALL[cat % 6], "x y"));
            cursor = end;
        }
        let labels = to_bio(&sentence, &spans).unwrap();
        prop_assert_eq!(labels.len(), len);
        let recovered = from_bio(&labels);
        let expected: Vec<(usize, usize, _)> =
            spans.iter().map(|s| (s.start, s.end, s.label)).collect();
        prop_assert_eq!(recovered, expected);
    }

    /// C-value scores are finite, non-negative, and sorted descending.
    #[test]
    fn cvalue_scores_finite_nonnegative_sorted(
        docs in prop::collection::vec(
            prop::collection::vec("[a-d]{1,3}", 2..8),
            1..6,
        ),
    ) {
        let texts: Vec<String> = docs.iter().map(|words| words.join(" ")).collect();
        let scores = cvalue_candidates(
            texts.iter().map(String::as_str),
            4,
            1,
            &Normalizer::new(),
        ).unwrap();
        for pair in scores.windows(2) {
            prop_assert!(pair[0].cvalue >= pair[1].cvalue);
        }
        for s in &scores {
            prop_assert!(s.cvalue.is_finite());
            prop_assert!(s.cvalue >= -1e-12);
            prop_assert!(s.frequency >= 1);
        }
    }
}
