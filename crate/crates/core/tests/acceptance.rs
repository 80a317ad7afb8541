//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]` line with the measured figures. Oracles here are written from
//! scratch against the public API so they stay independent of the library's
//! own implementation paths.

use std::io::Cursor;
use std::time::Instant;

use lexiforge_core::annotate::{
    emit_annotation, from_bio, match_terms, parse_annotation, to_bio, BioLabel, Sentence,
    SpanLabel, TermSpan,
};
use lexiforge_core::blocks::filter_blocks;
use lexiforge_core::embed::{cosine, EmbeddingStore};
use lexiforge_core::eval::{render_metric_table, render_acceptance_table, MetricCell, MetricLevel};
use lexiforge_core::extract::AcceptanceCell;
use lexiforge_core::ingest::{ingest, FilterRules, LanguageIdentifier, DEFAULT_KEYWORDS};
use lexiforge_core::lexicon::{Category, Lexicon};
use lexiforge_core::normalize::Normalizer;
use lexiforge_core::pipeline::{run_pipeline, PipelineInputs};
use lexiforge_core::rng::Rng;
use lexiforge_core::split::{split_dataset, SplitScheme};
use lexiforge_core::synth::{generate, SynthConfig};
use lexiforge_core::tagger::crf::{log_partition, path_score, viterbi, CrfParams};
use lexiforge_core::tagger::{grad_check, CnnConfig, ModelKind, TrainConfig};

// ---------------------------------------------------------------------------
// Criterion 1: CRF oracle suite.

/// Independent brute force: enumerate every k^T path, accumulating scores
/// left to right; ties prefer the path whose reversed label sequence is
/// lexicographically smallest.
fn oracle_paths(
    emissions: &[f64],
    t_len: usize,
    crf: &CrfParams,
) -> (f64 /* logZ */, Vec<usize>, f64 /* best */) {
    let k = crf.k;
    let mut best_path = vec![0usize; t_len];
    let mut best_score = f64::NEG_INFINITY;
    let mut all_scores = Vec::new();
    let mut path = vec![0usize; t_len];
    loop {
        let mut score = crf.start[path[0]] + emissions[path[0]];
        for t in 1..t_len {
            score += crf.transitions[path[t - 1] * k + path[t]];
            score += emissions[t * k + path[t]];
        }
        score += crf.stop[path[t_len - 1]];
        all_scores.push(score);
        let replaces = score > best_score
            || (score == best_score
                && (0..t_len)
                    .rev()
                    .find(|&t| path[t] != best_path[t])
                    .map(|t| path[t] < best_path[t])
                    .unwrap_or(false));
        if replaces {
            best_score = score;
            best_path.copy_from_slice(&path);
        }
        let mut t = 0;
        loop {
            if t == t_len {
                let max = all_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let log_z = max
                    + all_scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
                return (log_z, best_path, best_score);
            }
            path[t] += 1;
            if path[t] < k {
                break;
            }
            path[t] = 0;
            t += 1;
        }
    }
}

#[test]
fn c01_crf_oracle_suite() {
    let started = Instant::now();
    let mut rng = Rng::new(0xC0FFEE);
    let instances = 1200;
    let mut worst_rel = 0.0f64;
    for case in 0..instances {
        let t_len = 1 + rng.below(5);
        let k = 2 + rng.below(3);
        // Half the instances quantize scores to half-integers so exact ties
        // genuinely occur and exercise the tie-break.
        let quantized = case % 2 == 0;
        let mut draw = |rng: &mut Rng| {
            if quantized {
                (rng.below(9) as f64) * 0.5 - 2.0
            } else {
                rng.uniform(-2.0, 2.0)
            }
        };
        let emissions: Vec<f64> = (0..t_len * k).map(|_| draw(&mut rng)).collect();
        let mut crf = CrfParams::zeros(k);
        for v in crf.transitions.iter_mut() {
            *v = draw(&mut rng);
        }
        for v in crf.start.iter_mut() {
            *v = draw(&mut rng);
        }
        for v in crf.stop.iter_mut() {
            *v = draw(&mut rng);
        }

        let (oracle_z, oracle_path, oracle_best) = oracle_paths(&emissions, t_len, &crf);
        let fast_z = log_partition(&emissions, t_len, &crf);
        let rel = (fast_z - oracle_z).abs() / oracle_z.abs().max(1.0);
        worst_rel = worst_rel.max(rel);
        assert!(rel < 1e-10, "case {case}: logZ {fast_z} vs oracle {oracle_z}");

        let (fast_path, fast_best) = viterbi(&emissions, t_len, &crf);
        assert_eq!(fast_path, oracle_path, "case {case}: path mismatch");
        assert_eq!(fast_best, oracle_best, "case {case}: score mismatch");
        // Path score route agrees with the decoder's reported score.
        assert_eq!(path_score(&emissions, t_len, &crf, &fast_path), fast_best);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "oracle suite took {elapsed:?}");
    println!(
        "[PASS] CRF oracle suite: {instances} instances, worst logZ rel err {worst_rel:.2e}, \
Viterbi exact on all, {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: gradient checks.

#[test]
fn c02_gradient_checks() {
    let started = Instant::now();
    let words = ["alpha", "beta", "gamma", "delta", "innovation"];
    let make = |t: usize| {
        let inn = BioLabel::In(SpanLabel::Category(Category::Inn));
        lexiforge_core::tagger::Sequence::new(
            (0..t).map(|i| words[i % words.len()].to_string()).collect(),
            (0..t).map(|i| if i % 3 == 1 { inn } else { BioLabel::O }).collect(),
        )
    };
    let linear = grad_check(ModelKind::LinearCrf, &make(3), 1e-4, 20, 101).unwrap();
    assert!(linear.max_rel_err < 1e-6, "linear-crf: {linear:?}");
    let cnn = grad_check(ModelKind::Cnn, &make(4), 1e-4, 20, 103).unwrap();
    assert!(cnn.max_rel_err < 1e-3, "cnn: {cnn:?}");
    let cnn_crf = grad_check(ModelKind::CnnCrf, &make(4), 1e-4, 20, 107).unwrap();
    assert!(cnn_crf.max_rel_err < 1e-3, "cnn-crf: {cnn_crf:?}");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "gradient checks took {elapsed:?}");
    println!(
        "[PASS] gradient checks: linear-crf {:.2e} (< 1e-6), cnn {:.2e}, cnn-crf {:.2e} (< 1e-3), {elapsed:?}",
        linear.max_rel_err, cnn.max_rel_err, cnn_crf.max_rel_err
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: published metric-table arithmetic.

#[test]
fn c03_metric_table_arithmetic() {
    let cell = MetricCell::new("CNN", 1, 0.8056, 0.7417, MetricLevel::Token);
    assert!(
        (cell.f1 - 0.7723).abs() <= 0.0001,
        "F1 from P=0.8056 R=0.7417 was {}",
        cell.f1
    );
    let crf_cells: Vec<MetricCell> = [
        (1u8, 0.8286, 0.7406),
        (2, 0.8701, 0.7179),
        (3, 0.8938, 0.5930),
        (4, 0.8796, 0.6479),
    ]
    .iter()
    .map(|(s, p, r)| MetricCell::new("CRF", *s, *p, *r, MetricLevel::Token))
    .collect();
    let mean: f64 = crf_cells.iter().map(|c| c.precision).sum::<f64>() / 4.0;
    assert!((mean - 0.8680).abs() <= 0.0001, "precision mean was {mean}");
    let table = render_metric_table(&crf_cells);
    assert!(table.contains("0.8680"), "rendered table:\n{table}");
    println!(
        "[PASS] metric-table arithmetic: F1(0.8056, 0.7417) = {:.4}, precision row mean = {mean:.4}",
        cell.f1
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: acceptance-rate table arithmetic.

#[test]
fn c04_acceptance_table_arithmetic() {
    // Counts and accepted totals whose exact rates round to the published
    // percentages: 141/202, 158/234, 94/182, 391/503.
    let cells: Vec<AcceptanceCell> = [
        (1u8, 202usize, 141usize),
        (2, 234, 158),
        (3, 182, 94),
        (4, 503, 391),
    ]
    .iter()
    .map(|(scheme, total, accepted)| AcceptanceCell {
        model_id: "fixture".to_string(),
        scheme_id: *scheme,
        total: *total,
        accepted: *accepted,
        decided: *total,
    })
    .collect();
    for (cell, expected) in cells.iter().zip([69.80, 67.52, 51.65, 77.73]) {
        let rate = cell.rate().unwrap();
        assert!((rate - expected).abs() < 0.005, "{rate} vs {expected}");
    }
    let mean: f64 = cells.iter().map(|c| c.rate().unwrap()).sum::<f64>() / 4.0;
    assert!((mean - 66.68).abs() <= 0.01, "mean rate was {mean}");
    let table = render_acceptance_table(&cells);
    for needle in ["202 (69.80%)", "234 (67.52%)", "182 (51.65%)", "503 (77.73%)"] {
        assert!(table.contains(needle), "missing {needle} in:\n{table}");
    }
    println!("[PASS] acceptance-table arithmetic: rates render exactly, mean {mean:.2} (±0.01 of 66.68)");
}

// ---------------------------------------------------------------------------
// Criterion 5: BIO and markup round-trips over random cases.

fn random_word(rng: &mut Rng) -> String {
    const POOL: &[&str] = &[
        "alpha", "beta", "gamma", "delta", "omega", "kappa", "sigma", "zeta", "factory",
        "design", "ledger", "modèle", "durabilité", "état", "re-use", "don't", "x1",
    ];
    POOL[rng.below(POOL.len())].to_string()
}

fn random_case(rng: &mut Rng) -> (Sentence, Vec<TermSpan>) {
    let len = 1 + rng.below(14);
    let tokens: Vec<String> = (0..len).map(|_| random_word(rng)).collect();
    let sentence = Sentence::from_text(&tokens.join(" "));
    let token_count = sentence.tokens.len();

    // Non-overlapping spans over the real token count.
    let mut spans = Vec::new();
    let mut cursor = 0;
    let macro_budget = 1 + rng.below(2); // at most this many macro spans
    let mut macros_used = 0;
    while cursor < token_count {
        if rng.next_f64() < 0.55 {
            cursor += 1 + rng.below(2);
            continue;
        }
        let width = 1 + rng.below(3.min(token_count - cursor));
        let start = cursor;
        let end = cursor + width;
        cursor = end;
        let is_macro = macros_used < macro_budget && rng.next_f64() < 0.25;
        if is_macro {
            macros_used += 1;
            // Two constituents unless this is the only macro in the sentence.
            let parts = if macro_budget == 1 { 2 + rng.below(3) } else { 2 };
            let canonicals: Vec<String> = (0..parts)
                .map(|_| format!("{} {}", random_word(rng), random_word(rng)))
                .collect();
            spans.push(TermSpan::macro_term(start, end, canonicals));
        } else {
            let category = Category::ALL[rng.below(6)];
            let canonical = format!("{} {}", random_word(rng), random_word(rng));
            spans.push(TermSpan::term(start, end, category, &canonical));
        }
    }
    (sentence, spans)
}

#[test]
fn c05_round_trip_properties() {
    let mut rng = Rng::new(0xB10);
    let cases = 10_000;
    for case in 0..cases {
        let (sentence, spans) = random_case(&mut rng);

        let labels = to_bio(&sentence, &spans).expect("generated spans are valid");
        let recovered = from_bio(&labels);
        let expected: Vec<(usize, usize, SpanLabel)> =
            spans.iter().map(|s| (s.start, s.end, s.label)).collect();
        assert_eq!(recovered, expected, "case {case}: BIO round trip");

        let line = emit_annotation(&sentence, &spans);
        let (parsed, parsed_spans) = parse_annotation(&line)
            .unwrap_or_else(|e| panic!("case {case}: parse failed: {e}\nline: {line}"));
        assert_eq!(parsed.tokens, sentence.tokens, "case {case}: tokens");
        assert_eq!(parsed_spans, spans, "case {case}: spans\nline: {line}");
        // Re-emission is byte-identical.
        assert_eq!(emit_annotation(&parsed, &parsed_spans), line, "case {case}");
    }
    println!("[PASS] round-trip properties: {cases} random cases, zero failures on both formats");
}

// ---------------------------------------------------------------------------
// Criterion 6: longest-match and macro-term unit cases.

#[test]
fn c06_longest_match_and_macro_cases() {
    let tsv = "surface\tcategory\ninnovation\tinn\ninnovation technology\tdig\n\
functionality and design\tinn\ndesign solutions\tinn\n";
    let lexicon = Lexicon::load(Cursor::new(tsv), Normalizer::new()).unwrap();

    let nested = Sentence::from_text("our innovation technology wins");
    let spans = match_terms(&nested, &lexicon);
    assert_eq!(spans.len(), 1);
    assert_eq!((spans[0].start, spans[0].end), (1, 3));
    assert_eq!(spans[0].category(), Some(Category::Dig));
    assert_eq!(spans[0].canonical(), "innovation technology");

    let solo = Sentence::from_text("pure innovation here");
    let spans = match_terms(&solo, &lexicon);
    assert_eq!(spans.len(), 1);
    assert_eq!((spans[0].start, spans[0].end), (1, 2));
    assert_eq!(spans[0].category(), Some(Category::Inn));

    let overlapping = Sentence::from_text("we sell functionality and design solutions today");
    let spans = match_terms(&overlapping, &lexicon);
    assert_eq!(spans.len(), 1);
    assert!(spans[0].is_macro());
    assert_eq!((spans[0].start, spans[0].end), (2, 6));
    assert_eq!(
        spans[0].canonicals,
        vec!["functionality and design".to_string(), "design solutions".to_string()]
    );
    println!("[PASS] longest-match and macro-term cases produce exactly the expected spans");
}

// ---------------------------------------------------------------------------
// Criteria 7 and 8: synthetic end-to-end benchmark and split invariants.

#[test]
fn c07_c08_end_to_end_benchmark_and_split_invariants() {
    let started = Instant::now();
    let corpus = generate(&SynthConfig::default());
    let dir = tempfile::tempdir().unwrap();
    corpus.write_to(dir.path()).unwrap();
    let manifest = corpus.manifest(&dir.path().join("docs"));
    let store = ingest(&manifest, &FilterRules::default(), &LanguageIdentifier::bundled())
        .unwrap();
    assert_eq!(store.skipped.len(), 0, "skipped: {:?}", store.skipped);
    let lexicon =
        Lexicon::load(Cursor::new(corpus.lexicon_tsv.as_bytes()), Normalizer::new()).unwrap();
    let embeddings =
        EmbeddingStore::load(Cursor::new(corpus.embeddings_txt.as_bytes())).unwrap();

    let inputs = PipelineInputs {
        store: &store,
        lexicon: &lexicon,
        embeddings: &embeddings,
        threshold: 0.5,
        scheme_id: 1,
        seed: 42,
        models: vec![ModelKind::LinearCrf, ModelKind::CnnCrf],
        cnn: CnnConfig::default(),
        train: TrainConfig {
            max_epochs: 14,
            batch_size: 16,
            learning_rate: 5e-3,
            patience: 3,
            ..Default::default()
        },
        dev_fraction: 0.1,
        seed_keywords: DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect(),
    };
    let run = run_pipeline(&inputs).unwrap();

    for kind in ["linear-crf", "cnn-crf"] {
        let cell = run
            .cells
            .iter()
            .find(|c| c.model_id == kind && c.level == MetricLevel::Entity)
            .expect("entity cell present");
        assert!(
            cell.f1 >= 0.90,
            "{kind} entity F1 {:.4} below 0.90 (cells: {:?})",
            cell.f1,
            run.cells
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "benchmark took {elapsed:?}");
    let f1s: Vec<String> = run
        .cells
        .iter()
        .filter(|c| c.level == MetricLevel::Entity)
        .map(|c| format!("{} {:.4}", c.model_id, c.f1))
        .collect();
    println!(
        "[PASS] end-to-end benchmark: entity F1 {{{}}} ≥ 0.90 on held-out side, {elapsed:?}",
        f1s.join(", ")
    );

    // Criterion 8 reuses the same retained blocks.
    let docs = lexiforge_core::pipeline::annotate_store(
        &store,
        &lexicon,
        &lexiforge_core::annotate::SentenceSplitter::new(),
    );
    let mut blocks = lexiforge_core::pipeline::blocks_for_docs(&docs, &lexicon);
    let retained = filter_blocks(&mut blocks, &embeddings, 0.5);
    let (web, pdf) = lexiforge_core::pipeline::partition_by_source(retained);
    let mut all_ids: Vec<&str> = web.iter().chain(&pdf).map(|b| b.block_id.as_str()).collect();
    all_ids.sort_unstable();
    for scheme_id in 1..=4u8 {
        let scheme = SplitScheme::table_row(scheme_id, 777).unwrap();
        let first = split_dataset(web.clone(), pdf.clone(), &scheme, &lexicon).unwrap();
        let second = split_dataset(web.clone(), pdf.clone(), &scheme, &lexicon).unwrap();
        let ids =
            |blocks: &[lexiforge_core::blocks::ContextBlock]| -> Vec<String> {
                blocks.iter().map(|b| b.block_id.clone()).collect()
            };
        assert_eq!(ids(&first.train), ids(&second.train), "scheme {scheme_id} train reproducibility");
        assert_eq!(ids(&first.test), ids(&second.test), "scheme {scheme_id} test reproducibility");
        let train_ids = ids(&first.train);
        for id in &train_ids {
            assert!(
                !first.test.iter().any(|b| &b.block_id == id),
                "scheme {scheme_id}: {id} in both sides"
            );
        }
        let mut union: Vec<&str> = first
            .train
            .iter()
            .chain(&first.test)
            .map(|b| b.block_id.as_str())
            .collect();
        union.sort_unstable();
        assert_eq!(union, all_ids, "scheme {scheme_id}: conservation");
    }
    println!(
        "[PASS] split invariants: schemes 1–4 disjoint, conserving, and bit-identical across reruns"
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: block gate equals brute force and is monotone.

#[test]
fn c09_block_gate_equivalence() {
    let store_text = "\
8 3
alpha 1 0 0
beta 0.9 0.1 0
near 0.7 0.3 0
mid 0.5 0.5 0
far 0.1 0.9 0
off 0 1 0
noise 0 0 1
innovation 1 0 0
";
    let store = EmbeddingStore::load(Cursor::new(store_text)).unwrap();
    let tsv = "surface\tcategory\nalpha beta\tinn\n";
    let lexicon = Lexicon::load(Cursor::new(tsv), Normalizer::new()).unwrap();

    // Ten one-sentence docs with varying companions around the same term;
    // the companion mix puts four blocks under the 0.5 gate.
    let companions = [
        "beta beta beta",
        "near near near",
        "mid mid mid",
        "far far far",
        "off off off off off",
        "noise noise noise noise noise",
        "beta near mid",
        "near mid far",
        "off noise off noise off noise",
        "far off noise far off noise",
    ];
    let mut blocks = Vec::new();
    for (i, extra) in companions.iter().enumerate() {
        let text = format!("Alpha beta {extra}.");
        let mut sentence = Sentence::from_text(&text);
        sentence.doc_id = format!("doc{i}");
        let spans = match_terms(&sentence, &lexicon);
        assert_eq!(spans.len(), 1, "doc{i}");
        blocks.extend(lexiforge_core::blocks::build_blocks(
            &[sentence],
            &[spans],
            lexiforge_core::blocks::BlockSource::Web,
            &lexicon,
        ));
    }
    assert_eq!(blocks.len(), 10);

    // Independent recomputation of the gate from raw vectors.
    let brute: Vec<(String, f64)> = blocks
        .iter()
        .map(|b| {
            let term_tokens: Vec<&str> = b.term.split(' ').collect();
            let mut term_vec = vec![0.0; store.dim()];
            let mut count = 0usize;
            for t in &term_tokens {
                if let Some(v) = store.get(t) {
                    for (acc, x) in term_vec.iter_mut().zip(v) {
                        *acc += x;
                    }
                    count += 1;
                }
            }
            term_vec.iter_mut().for_each(|x| *x /= count.max(1) as f64);
            let mut block_vec = vec![0.0; store.dim()];
            let mut n = 0usize;
            for token in b.tokens() {
                if let Some(v) = store.get(token) {
                    for (acc, x) in block_vec.iter_mut().zip(v) {
                        *acc += x;
                    }
                    n += 1;
                }
            }
            block_vec.iter_mut().for_each(|x| *x /= n.max(1) as f64);
            (b.block_id.clone(), cosine(&term_vec, &block_vec).unwrap())
        })
        .collect();
    let brute_retained: Vec<&str> = brute
        .iter()
        .filter(|(_, s)| *s >= 0.5)
        .map(|(id, _)| id.as_str())
        .collect();

    let retained = filter_blocks(&mut blocks, &store, 0.5);
    let got: Vec<&str> = retained.iter().map(|b| b.block_id.as_str()).collect();
    assert_eq!(got, brute_retained, "gate disagrees with brute force");
    assert!(!retained.is_empty() && retained.len() < blocks.len());

    // Monotonicity under a rising threshold.
    let mut previous: Option<Vec<String>> = None;
    for threshold in [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0] {
        let ids: Vec<String> = filter_blocks(&mut blocks, &store, threshold)
            .into_iter()
            .map(|b| b.block_id)
            .collect();
        if let Some(prev) = &previous {
            assert!(ids.iter().all(|id| prev.contains(id)), "threshold {threshold}");
        }
        previous = Some(ids);
    }
    println!(
        "[PASS] block gate: retained set equals brute-force recomputation ({} of {}), monotone in threshold",
        brute_retained.len(),
        blocks.len()
    );
}
