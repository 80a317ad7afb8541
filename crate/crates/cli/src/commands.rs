//! Stage implementations behind the subcommands. Each stage reads files,
//! calls into the library, and writes its artifacts through the stage runner
//! so digests and parameters land in a manifest next to the outputs.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use lexiforge_core::annotate::bio::{read_conll, write_conll};
use lexiforge_core::annotate::{emit_annotation, BioLabel, SentenceSplitter};
use lexiforge_core::blocks::{filter_blocks, read_blocks, write_blocks, ContextBlock};
use lexiforge_core::cvalue::{cvalue_candidates, write_candidate_report};
use lexiforge_core::embed::EmbeddingStore;
use lexiforge_core::eval::{
    render_metric_table, render_acceptance_table, write_report_tsv, MetricCell, MetricLevel, PairCounts,
};
use lexiforge_core::extract::{
    acceptance_stats, read_candidates, read_decisions, write_candidates, ReviewSession,
};
use lexiforge_core::ingest::{ingest, CorpusStore, FilterRules, LanguageIdentifier, SourceManifest};
use lexiforge_core::lexicon::{Category, Lexicon};
use lexiforge_core::normalize::Normalizer;
use lexiforge_core::pipeline::{
    annotate_store, blocks_for_docs, extract_candidates_for_blocks,
    partition_by_source, AnnotatedDoc,
};
use lexiforge_core::rng::Rng;
use lexiforge_core::split::{split_dataset, write_ids, SplitScheme};
use lexiforge_core::tagger::train::carve_dev;
use lexiforge_core::tagger::{
    blocks_to_sequences, train, CnnConfig, EpochStats, ModelKind, Sequence, TaggerModel,
    TrainConfig,
};

use crate::config::{load_lemmas, PipelineConfig};
use crate::error::CliError;
use crate::workspace::run_stage;

pub fn normalizer_from(lemmas: &Option<PathBuf>) -> Result<Normalizer, CliError> {
    Ok(match lemmas {
        Some(path) => Normalizer::with_lemmas(load_lemmas(path)?),
        None => Normalizer::new(),
    })
}

// ---------------------------------------------------------------------------
// ingest

pub fn cmd_ingest(manifest: &Path, out: &Path, rules: &FilterRules) -> Result<(), CliError> {
    let source = SourceManifest::load(manifest)?;
    let langid = LanguageIdentifier::bundled();
    let store = ingest(&source, rules, &langid)?;
    run_stage(out, "ingest", json!({ "manifest": manifest, "rules": rules }), |stage| {
        stage.record_input(manifest)?;
        store.write_dir(stage.dir())?;
        Ok(())
    })?;
    eprintln!(
        "ingested {} passages from {} documents ({} skipped) -> {}",
        store.passages.len(),
        source.entries.len(),
        store.skipped.len(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// lexicon

pub fn cmd_lexicon_load(
    file: &Path,
    out: &Path,
    lemmas: &Option<PathBuf>,
) -> Result<(), CliError> {
    let normalizer = normalizer_from(lemmas)?;
    let lexicon = Lexicon::load_path(file, normalizer)?;
    run_stage(out, "lexicon", json!({ "file": file, "lemmas": lemmas }), |stage| {
        stage.record_input(file)?;
        let mut buf = Vec::new();
        lexicon.save(&mut buf)?;
        std::fs::write(stage.out("lexicon.tsv"), buf)?;
        Ok(())
    })?;
    eprintln!("loaded {} terms, version {} -> {}", lexicon.len(), lexicon.version(), out.display());
    Ok(())
}

pub fn cmd_lexicon_bootstrap(
    corpus: &Path,
    out: &Path,
    max_n: usize,
    min_freq: usize,
) -> Result<(), CliError> {
    let store = CorpusStore::read_dir(corpus)?;
    let normalizer = Normalizer::new();
    let scores = cvalue_candidates(
        store.passages.iter().map(|p| p.text.as_str()),
        max_n,
        min_freq,
        &normalizer,
    )?;
    run_stage(
        out,
        "bootstrap",
        json!({ "corpus": corpus, "max_n": max_n, "min_freq": min_freq }),
        |stage| {
            let mut buf = Vec::new();
            write_candidate_report(&mut buf, &scores)?;
            std::fs::write(stage.out("candidates.tsv"), buf)?;
            Ok(())
        },
    )?;
    eprintln!("scored {} candidate ngrams -> {}", scores.len(), out.display());
    Ok(())
}

pub fn cmd_lexicon_merge(
    lexicon_path: &Path,
    accepted_path: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let lexicon = Lexicon::load_path(lexicon_path, Normalizer::new())?;
    let text = std::fs::read_to_string(accepted_path)?;
    let mut accepted = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (ngram, code) = line.split_once('\t').ok_or_else(|| {
            CliError::data(format!("accepted file line {}: need ngram<TAB>category", idx + 1))
        })?;
        let category = Category::from_code(code.trim()).ok_or_else(|| {
            CliError::data(format!("accepted file line {}: unknown category {code:?}", idx + 1))
        })?;
        accepted.push((ngram.to_string(), category));
    }
    let merged = lexicon.merge_accepted(&accepted)?;
    run_stage(
        out,
        "merge",
        json!({ "lexicon": lexicon_path, "accepted": accepted_path }),
        |stage| {
            stage.record_input(lexicon_path)?;
            stage.record_input(accepted_path)?;
            let mut buf = Vec::new();
            merged.save(&mut buf)?;
            std::fs::write(stage.out("lexicon.tsv"), buf)?;
            Ok(())
        },
    )?;
    eprintln!(
        "merged {} accepted terms: {} -> {} ({})",
        accepted.len(),
        lexicon.version(),
        merged.version(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// annotate

pub fn cmd_annotate(
    corpus: &Path,
    lexicon_path: &Path,
    out: &Path,
    lemmas: &Option<PathBuf>,
    abbreviations: &[String],
) -> Result<(), CliError> {
    let store = CorpusStore::read_dir(corpus)?;
    let lexicon = Lexicon::load_path(lexicon_path, normalizer_from(lemmas)?)?;
    let splitter = if abbreviations.is_empty() {
        SentenceSplitter::new()
    } else {
        SentenceSplitter::with_extra(abbreviations.iter().cloned())
    };
    let docs = annotate_store(&store, &lexicon, &splitter);
    run_stage(
        out,
        "annotate",
        json!({ "corpus": corpus, "lexicon": lexicon_path, "lexicon_version": lexicon.version() }),
        |stage| {
            stage.record_input(lexicon_path)?;
            write_annotated_docs(&stage.out("sentences.jsonl"), &docs)?;

            let mut annotated = std::io::BufWriter::new(std::fs::File::create(
                stage.out("annotated.txt"),
            )?);
            let mut conll = Vec::new();
            for doc in &docs {
                for passage in &doc.passages {
                    for (sentence, spans) in passage.sentences.iter().zip(&passage.spans) {
                        writeln!(annotated, "{}", emit_annotation(sentence, spans))?;
                        let labels = lexiforge_core::annotate::to_bio(sentence, spans)?;
                        conll.push((
                            format!("{}#{}", sentence.doc_id, sentence.index),
                            sentence.tokens.clone(),
                            labels,
                        ));
                    }
                }
            }
            annotated.flush()?;
            let rows: Vec<(Option<&str>, &[String], &[BioLabel])> = conll
                .iter()
                .map(|(id, tokens, labels)| {
                    (Some(id.as_str()), tokens.as_slice(), labels.as_slice())
                })
                .collect();
            let mut bio = std::io::BufWriter::new(std::fs::File::create(stage.out("bio.conll"))?);
            write_conll(&mut bio, &rows)?;
            bio.flush()?;
            Ok(())
        },
    )?;
    let sentence_count: usize = docs
        .iter()
        .flat_map(|d| d.passages.iter().map(|p| p.sentences.len()))
        .sum();
    eprintln!("annotated {sentence_count} sentences in {} docs -> {}", docs.len(), out.display());
    Ok(())
}

fn write_annotated_docs(path: &Path, docs: &[AnnotatedDoc]) -> Result<(), CliError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for doc in docs {
        serde_json::to_writer(&mut w, doc)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_annotated_docs(path: &Path) -> Result<Vec<AnnotatedDoc>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut docs = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            docs.push(serde_json::from_str(&line)?);
        }
    }
    Ok(docs)
}

// ---------------------------------------------------------------------------
// blocks

pub fn cmd_blocks(
    annotations: &Path,
    lexicon_path: &Path,
    embeddings_path: &Path,
    out: &Path,
    threshold: f64,
) -> Result<(), CliError> {
    let docs = read_annotated_docs(&annotations.join("sentences.jsonl"))?;
    let lexicon = Lexicon::load_path(lexicon_path, Normalizer::new())?;
    let embeddings = EmbeddingStore::load_path(embeddings_path)?;
    let mut blocks = blocks_for_docs(&docs, &lexicon);
    let retained = filter_blocks(&mut blocks, &embeddings, threshold);
    run_stage(
        out,
        "blocks",
        json!({ "annotations": annotations, "threshold": threshold }),
        |stage| {
            stage.record_input(&annotations.join("sentences.jsonl"))?;
            stage.record_input(lexicon_path)?;
            stage.record_input(embeddings_path)?;
            let mut all = std::io::BufWriter::new(std::fs::File::create(stage.out("blocks.jsonl"))?);
            write_blocks(&mut all, &blocks)?;
            all.flush()?;
            Ok(())
        },
    )?;
    eprintln!(
        "built {} blocks, {} retained at threshold {threshold} -> {}",
        blocks.len(),
        retained.len(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// split

pub fn cmd_split(
    blocks_path: &Path,
    lexicon_path: &Path,
    scheme_id: u8,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let file = std::fs::File::open(blocks_path)
        .map_err(|e| CliError::data(format!("{}: {e}", blocks_path.display())))?;
    let blocks = read_blocks(std::io::BufReader::new(file))?;
    let retained: Vec<ContextBlock> = blocks
        .into_iter()
        .filter(|b| b.retained.unwrap_or(true))
        .collect();
    let lexicon = Lexicon::load_path(lexicon_path, Normalizer::new())?;
    let scheme = SplitScheme::table_row(scheme_id, seed)?;
    let (web, pdf) = partition_by_source(retained);
    let result = split_dataset(web, pdf, &scheme, &lexicon)?;
    run_stage(
        out,
        "split",
        json!({ "blocks": blocks_path, "scheme": scheme_id, "seed": seed }),
        |stage| {
            stage.record_input(blocks_path)?;
            stage.record_input(lexicon_path)?;
            for (name, side) in [("train", &result.train), ("test", &result.test)] {
                let mut ids = Vec::new();
                write_ids(&mut ids, side)?;
                std::fs::write(stage.out(&format!("{name}.ids")), ids)?;
                write_block_conll(&stage.out(&format!("{name}.conll")), side)?;
            }
            let mut keywords: Vec<&str> =
                result.web_train_keywords.iter().map(String::as_str).collect();
            keywords.extend(result.pdf_train_keywords.iter().map(String::as_str));
            keywords.sort_unstable();
            keywords.dedup();
            std::fs::write(stage.out("train_keywords.txt"), keywords.join("\n") + "\n")?;
            Ok(())
        },
    )?;
    eprintln!(
        "{}",
        lexiforge_core::split::scheme_summary(&scheme, result.train.len(), result.test.len())
    );
    eprintln!("split written -> {}", out.display());
    Ok(())
}

fn write_block_conll(path: &Path, blocks: &[ContextBlock]) -> Result<(), CliError> {
    let sequences = blocks_to_sequences(blocks)?;
    let rows: Vec<(Option<&str>, &[String], &[BioLabel])> = sequences
        .iter()
        .map(|s| (s.id.as_deref(), s.tokens.as_slice(), s.labels.as_slice()))
        .collect();
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_conll(&mut w, &rows)?;
    w.flush()?;
    Ok(())
}

pub fn sequences_from_conll(path: &Path) -> Result<Vec<Sequence>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(read_conll(std::io::BufReader::new(file))?
        .into_iter()
        .map(Sequence::from)
        .collect())
}

// ---------------------------------------------------------------------------
// train

#[allow(clippy::too_many_arguments)]
pub fn cmd_train(
    kind: ModelKind,
    train_path: &Path,
    dev_path: &Option<PathBuf>,
    out: &Path,
    cnn: &CnnConfig,
    cfg: &TrainConfig,
    dev_fraction: f64,
) -> Result<(), CliError> {
    let sequences = sequences_from_conll(train_path)?;
    let (train_set, dev_set) = match dev_path {
        Some(path) => (sequences, sequences_from_conll(path)?),
        None => carve_dev(sequences, dev_fraction, cfg.rng_seed),
    };
    let (model, history) = train(kind, &train_set, &dev_set, cnn, cfg)?;
    run_stage(
        out,
        "train",
        json!({ "model": kind.as_str(), "train": train_path, "config": cfg }),
        |stage| {
            stage.record_input(train_path)?;
            model.save_path(&stage.out("model.json"))?;
            write_history(&stage.out("history.tsv"), &history)?;
            Ok(())
        },
    )?;
    let last = history.last();
    eprintln!(
        "trained {kind} on {} sequences ({} dev): {} epochs, final dev F1 {:.4} -> {}",
        train_set.len(),
        dev_set.len(),
        history.len(),
        last.map(|h| h.dev_f1).unwrap_or(0.0),
        out.display()
    );
    Ok(())
}

fn write_history(path: &Path, history: &[EpochStats]) -> Result<(), CliError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "epoch\ttrain_loss\tdev_precision\tdev_recall\tdev_f1")?;
    for h in history {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            h.epoch, h.train_loss, h.dev_precision, h.dev_recall, h.dev_f1
        )?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// tag

pub fn cmd_tag(
    model_path: &Path,
    input: &Path,
    out: &Path,
    scheme_id: u8,
) -> Result<(), CliError> {
    let model = TaggerModel::load_path(model_path)?;
    let sequences = sequences_from_conll(input)?;
    run_stage(
        out,
        "tag",
        json!({ "model": model_path, "input": input, "scheme": scheme_id }),
        |stage| {
            stage.record_input(model_path)?;
            stage.record_input(input)?;
            let mut w = std::io::BufWriter::new(std::fs::File::create(
                stage.out("predictions.conll"),
            )?);
            writeln!(w, "# meta model={} scheme={scheme_id}", model.kind())?;
            for (i, seq) in sequences.iter().enumerate() {
                if i > 0 {
                    writeln!(w)?;
                }
                if let Some(id) = &seq.id {
                    writeln!(w, "# {id}")?;
                }
                let predicted = model.predict(&seq.tokens);
                for ((token, gold), pred) in seq.tokens.iter().zip(&seq.labels).zip(&predicted) {
                    writeln!(w, "{token}\t{gold}\t{pred}")?;
                }
            }
            w.flush()?;
            Ok(())
        },
    )?;
    eprintln!("tagged {} sequences with {} -> {}", sequences.len(), model.kind(), out.display());
    Ok(())
}

/// `(model, scheme)` metadata from a predictions file.
pub fn predictions_metadata(path: &Path) -> Result<(String, u8), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# meta ") {
            let mut model = None;
            let mut scheme = None;
            for field in rest.split_whitespace() {
                if let Some(v) = field.strip_prefix("model=") {
                    model = Some(v.to_string());
                }
                if let Some(v) = field.strip_prefix("scheme=") {
                    scheme = v.parse().ok();
                }
            }
            if let (Some(model), Some(scheme)) = (model, scheme) {
                return Ok((model, scheme));
            }
        }
    }
    Err(CliError::data(format!(
        "{}: no `# meta model=... scheme=...` header; pass --model-id and --scheme",
        path.display()
    )))
}

// ---------------------------------------------------------------------------
// extract

#[allow(clippy::too_many_arguments)]
pub fn cmd_extract(
    predictions: &Path,
    blocks_path: &Path,
    lexicon_path: &Path,
    embeddings_path: &Path,
    out: &Path,
    threshold: f64,
    keywords: &[String],
    meta_override: Option<(String, u8)>,
    lemmas: &Option<PathBuf>,
) -> Result<(), CliError> {
    let (model_id, scheme_id) = match meta_override {
        Some(meta) => meta,
        None => predictions_metadata(predictions)?,
    };
    let file = std::fs::File::open(blocks_path)
        .map_err(|e| CliError::data(format!("{}: {e}", blocks_path.display())))?;
    let blocks = read_blocks(std::io::BufReader::new(file))?;
    let by_id: BTreeMap<&str, &ContextBlock> =
        blocks.iter().map(|b| (b.block_id.as_str(), b)).collect();

    let pred_file = std::fs::File::open(predictions)
        .map_err(|e| CliError::data(format!("{}: {e}", predictions.display())))?;
    let pred_seqs = read_conll(std::io::BufReader::new(pred_file))?;

    let mut ordered_blocks = Vec::new();
    let mut label_rows = Vec::new();
    for seq in &pred_seqs {
        let Some(id) = &seq.id else {
            return Err(CliError::data("predictions file lacks block ids"));
        };
        let id = id.strip_prefix("meta ").map(|_| None).unwrap_or(Some(id.as_str()));
        let Some(id) = id else { continue };
        let Some(block) = by_id.get(id) else {
            return Err(CliError::data(format!("block {id:?} not present in {}", blocks_path.display())));
        };
        let labels = if seq.pred.is_empty() { seq.gold.clone() } else { seq.pred.clone() };
        ordered_blocks.push((*block).clone());
        label_rows.push(labels);
    }

    let lexicon = Lexicon::load_path(lexicon_path, normalizer_from(lemmas)?)?;
    let embeddings = EmbeddingStore::load_path(embeddings_path)?;
    let candidates = extract_candidates_for_blocks(
        &ordered_blocks,
        &label_rows,
        &lexicon,
        &embeddings,
        keywords,
        threshold,
        &model_id,
        scheme_id,
    );
    run_stage(
        out,
        "extract",
        json!({
            "predictions": predictions,
            "threshold": threshold,
            "model": model_id,
            "scheme": scheme_id,
            "lexicon_version": lexicon.version(),
            "reference": "seed keywords + gold terms of the predicted category",
        }),
        |stage| {
            stage.record_input(predictions)?;
            stage.record_input(blocks_path)?;
            let mut w = std::io::BufWriter::new(std::fs::File::create(
                stage.out("candidates.jsonl"),
            )?);
            write_candidates(&mut w, &candidates)?;
            w.flush()?;
            Ok(())
        },
    )?;
    eprintln!("extracted {} candidates -> {}", candidates.len(), out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// review

pub fn cmd_review(
    candidates_path: &Path,
    state_path: &Path,
    replay: &Option<PathBuf>,
    reviewer: &str,
    blocks_path: &Option<PathBuf>,
) -> Result<(), CliError> {
    let file = std::fs::File::open(candidates_path)
        .map_err(|e| CliError::data(format!("{}: {e}", candidates_path.display())))?;
    let candidates = read_candidates(std::io::BufReader::new(file))?;
    let mut session = ReviewSession::open(candidates.clone(), state_path)?;

    match replay {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            let decisions = read_decisions(std::io::BufReader::new(file))?;
            session.replay(decisions)?;
        }
        None => {
            let contexts = context_provider(blocks_path)?;
            let stdin = std::io::stdin();
            let stdout = std::io::stdout();
            session.run(stdin.lock(), stdout.lock(), reviewer, &contexts)?;
        }
    }

    let summary = session.summary();
    let decisions: Vec<_> = session.decisions().cloned().collect();
    let cells = acceptance_stats(&candidates, &decisions);
    println!(
        "reviewed: {} accepted, {} rejected, {} deferred, {} remaining",
        summary.accepted, summary.rejected, summary.deferred, summary.remaining
    );
    print!("{}", render_acceptance_table(&cells));
    Ok(())
}

type ContextFn = Box<dyn Fn(&lexiforge_core::extract::CandidateTerm) -> Vec<String>>;

fn context_provider(blocks_path: &Option<PathBuf>) -> Result<ContextFn, CliError> {
    let Some(path) = blocks_path else {
        return Ok(Box::new(|_| Vec::new()));
    };
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let blocks = read_blocks(std::io::BufReader::new(file))?;
    let mut sentences: BTreeMap<(String, usize), String> = BTreeMap::new();
    for block in &blocks {
        for sentence in &block.sentences {
            sentences
                .entry((sentence.doc_id.clone(), sentence.index))
                .or_insert_with(|| sentence.text.clone());
        }
    }
    Ok(Box::new(move |candidate| {
        candidate
            .occurrences
            .iter()
            .filter_map(|occ| sentences.get(&(occ.doc_id.clone(), occ.sentence_index)).cloned())
            .take(3)
            .collect()
    }))
}

// ---------------------------------------------------------------------------
// eval

pub fn cmd_eval(
    predictions: &[PathBuf],
    out: &Path,
    meta_override: Option<(String, u8)>,
) -> Result<(), CliError> {
    let mut cells: Vec<MetricCell> = Vec::new();
    let mut cells_no_mac: Vec<MetricCell> = Vec::new();
    for path in predictions {
        let (model_id, scheme_id) = match &meta_override {
            Some(meta) if predictions.len() == 1 => meta.clone(),
            _ => predictions_metadata(path)?,
        };
        let file = std::fs::File::open(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let sequences = read_conll(std::io::BufReader::new(file))?;
        let mut token = PairCounts::default();
        let mut entity = PairCounts::default();
        let mut token_no_mac = PairCounts::default();
        let mut entity_no_mac = PairCounts::default();
        for seq in &sequences {
            if seq.pred.len() != seq.gold.len() {
                return Err(CliError::data(format!(
                    "{}: sequence {:?} lacks a prediction column",
                    path.display(),
                    seq.id
                )));
            }
            token.add(lexiforge_core::eval::token_counts(&seq.pred, &seq.gold, true)?);
            entity.add(lexiforge_core::eval::entity_counts_from_labels(
                &seq.pred, &seq.gold, true,
            )?);
            token_no_mac.add(lexiforge_core::eval::token_counts(&seq.pred, &seq.gold, false)?);
            entity_no_mac.add(lexiforge_core::eval::entity_counts_from_labels(
                &seq.pred, &seq.gold, false,
            )?);
        }
        for (counts, level) in [(token, MetricLevel::Token), (entity, MetricLevel::Entity)] {
            let (p, r, _) = counts.prf();
            cells.push(MetricCell::new(&model_id, scheme_id, p, r, level));
        }
        for (counts, level) in
            [(token_no_mac, MetricLevel::Token), (entity_no_mac, MetricLevel::Entity)]
        {
            let (p, r, _) = counts.prf();
            cells_no_mac.push(MetricCell::new(&model_id, scheme_id, p, r, level));
        }
    }

    run_stage(out, "eval", json!({ "predictions": predictions }), |stage| {
        let mut tsv = Vec::new();
        write_report_tsv(&mut tsv, &cells)?;
        std::fs::write(stage.out("report.tsv"), tsv)?;

        let mut md = String::new();
        for (title, level) in [("Token level", MetricLevel::Token), ("Entity level", MetricLevel::Entity)]
        {
            let level_cells: Vec<MetricCell> =
                cells.iter().filter(|c| c.level == level).cloned().collect();
            md.push_str(&format!("## {title}\n\n{}\n", render_metric_table(&level_cells)));
            let no_mac: Vec<MetricCell> = cells_no_mac
                .iter()
                .filter(|c| c.level == level)
                .cloned()
                .collect();
            md.push_str(&format!(
                "### {title}, macro-terms excluded\n\n{}\n",
                render_metric_table(&no_mac)
            ));
        }
        std::fs::write(stage.out("report.md"), md)?;
        Ok(())
    })?;
    eprintln!("evaluated {} prediction files -> {}", predictions.len(), out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// pipeline

pub fn cmd_pipeline(config: &PipelineConfig, dry_run: bool) -> Result<(), CliError> {
    config.validate()?;
    if dry_run {
        println!("configuration valid; dry run requested, nothing written");
        return Ok(());
    }
    let workdir = config.resolve_workdir()?;
    let _lock = crate::workspace::WorkdirLock::acquire(&workdir)?;

    let manifest = config.manifest.as_ref().expect("validated");
    let lexicon_path = config.lexicon.as_ref().expect("validated");
    let embeddings_path = config.embeddings.as_ref().expect("validated");
    let rules = config.filter_rules();

    cmd_ingest(manifest, &workdir.join("corpus"), &rules)?;
    cmd_lexicon_load(lexicon_path, &workdir.join("lexicon"), &config.lemmas)?;
    let canonical_lexicon = workdir.join("lexicon/lexicon.tsv");
    // The canonical lexicon already folded the lemma table into its keys,
    // but matching needs the same table at tokenization time too.
    cmd_annotate(
        &workdir.join("corpus"),
        &canonical_lexicon,
        &workdir.join("annotate"),
        &config.lemmas,
        &config.abbreviations,
    )?;
    cmd_blocks(
        &workdir.join("annotate"),
        &canonical_lexicon,
        embeddings_path,
        &workdir.join("blocks"),
        config.threshold,
    )?;
    let split_seed = Rng::new(config.seed).derive("split").next_u64();
    cmd_split(
        &workdir.join("blocks/blocks.jsonl"),
        &canonical_lexicon,
        config.scheme,
        split_seed,
        &workdir.join("split"),
    )?;

    let mut prediction_files = Vec::new();
    let mut all_candidates_paths = Vec::new();
    for kind in config.model_kinds()? {
        let mut train_cfg = config.train.clone();
        train_cfg.rng_seed = Rng::new(config.seed).derive(&format!("train:{kind}")).next_u64();
        let train_dir = workdir.join(format!("train-{kind}"));
        cmd_train(
            kind,
            &workdir.join("split/train.conll"),
            &None,
            &train_dir,
            &config.cnn,
            &train_cfg,
            config.dev_fraction,
        )?;
        let tag_dir = workdir.join(format!("tag-{kind}"));
        cmd_tag(
            &train_dir.join("model.json"),
            &workdir.join("split/test.conll"),
            &tag_dir,
            config.scheme,
        )?;
        prediction_files.push(tag_dir.join("predictions.conll"));
        let extract_dir = workdir.join(format!("extract-{kind}"));
        cmd_extract(
            &tag_dir.join("predictions.conll"),
            &workdir.join("blocks/blocks.jsonl"),
            &canonical_lexicon,
            embeddings_path,
            &extract_dir,
            config.threshold,
            &config.keywords,
            None,
            &config.lemmas,
        )?;
        all_candidates_paths.push(extract_dir.join("candidates.jsonl"));
    }

    if let Some(replay) = &config.review_replay {
        let merged = workdir.join("review/candidates.jsonl");
        std::fs::create_dir_all(workdir.join("review"))?;
        let mut all = Vec::new();
        for path in &all_candidates_paths {
            let file = std::fs::File::open(path)?;
            all.extend(read_candidates(std::io::BufReader::new(file))?);
        }
        {
            let mut w = std::io::BufWriter::new(std::fs::File::create(&merged)?);
            write_candidates(&mut w, &all)?;
            w.flush()?;
        }
        cmd_review(
            &merged,
            &workdir.join("review/decisions.jsonl"),
            &Some(replay.clone()),
            "replay",
            &Some(workdir.join("blocks/blocks.jsonl")),
        )?;
    }

    cmd_eval(&prediction_files, &workdir.join("eval"), None)?;
    println!("pipeline complete -> {}", workdir.display());
    Ok(())
}
