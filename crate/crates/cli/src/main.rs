//! `lexiforge`: build domain lexicons for emerging concepts from local
//! corpora — filter, annotate, gate, split, train, tag, extract, review,
//! and evaluate, as one pipeline or stage by stage.

mod commands;
mod config;
mod error;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lexiforge_core::ingest::FilterRules;
use lexiforge_core::tagger::{ModelKind, TrainConfig};

use config::{Overrides, PipelineConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "lexiforge", version, about = "Domain lexicon construction pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest local HTML/text documents listed in a manifest
    Ingest {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated seed keywords (default: the five standard ones)
        #[arg(long, value_delimiter = ',')]
        keywords: Option<Vec<String>>,
        /// Maximum URL path depth kept in homepage mode
        #[arg(long)]
        max_depth: Option<usize>,
        /// Substrings that drop a URL when found in its path or query
        #[arg(long = "url-exclude")]
        url_excludes: Vec<String>,
        /// Keep URLs of any depth
        #[arg(long)]
        no_homepage_only: bool,
    },
    /// Load, bootstrap, or grow the gold lexicon
    Lexicon {
        #[command(subcommand)]
        action: LexiconAction,
    },
    /// Segment sentences, match gold terms, and emit annotation formats
    Annotate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional token<TAB>lemma table
        #[arg(long)]
        lemmas: Option<PathBuf>,
        /// Extra abbreviations that block sentence splits
        #[arg(long, value_delimiter = ',')]
        abbreviations: Vec<String>,
    },
    /// Build five-sentence context blocks and apply the similarity gate
    Blocks {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Partition retained blocks into one of the four train/test schemes
    Split {
        #[arg(long)]
        blocks: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        scheme: u8,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a tagger on a CoNLL file
    Train {
        #[arg(long)]
        model: ModelArg,
        #[arg(long)]
        train: PathBuf,
        /// Held-out dev CoNLL file; carved from train when absent
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        dev_fraction: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long)]
        min_freq: Option<usize>,
    },
    /// Label sequences with a trained model
    Tag {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=4))]
        scheme: u8,
    },
    /// Collect new candidate terms from predictions
    Extract {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        blocks: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, value_delimiter = ',')]
        keywords: Option<Vec<String>>,
        #[arg(long)]
        model_id: Option<String>,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        scheme: Option<u8>,
        /// Optional token<TAB>lemma table
        #[arg(long)]
        lemmas: Option<PathBuf>,
    },
    /// Review candidates interactively or replay a decisions file
    Review {
        #[arg(long)]
        candidates: PathBuf,
        /// Append-only decisions state file (created on first use)
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        replay: Option<PathBuf>,
        #[arg(long, default_value = "expert")]
        reviewer: String,
        /// blocks.jsonl used to show occurrence contexts
        #[arg(long)]
        blocks: Option<PathBuf>,
    },
    /// Score predictions and render the report tables
    Eval {
        #[arg(long, required = true, num_args = 1..)]
        predictions: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        model_id: Option<String>,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        scheme: Option<u8>,
    },
    /// Run every stage from one configuration file
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
        /// Validate the configuration without writing anything
        #[arg(long)]
        dry_run: bool,
    },
    /// Generate a synthetic demo corpus with manifest, lexicon, and embeddings
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 120)]
        web_docs: usize,
        #[arg(long, default_value_t = 80)]
        pdf_docs: usize,
        #[arg(long, default_value_t = 20240501)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum LexiconAction {
    /// Validate and canonicalize a lexicon TSV
    Load {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        lemmas: Option<PathBuf>,
    },
    /// Rank candidate ngrams of an ingested corpus by C-value
    Bootstrap {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(2..=6))]
        max_n: u64,
        #[arg(long, default_value_t = 2)]
        min_freq: usize,
    },
    /// Fold accepted terms into a new lexicon version
    Merge {
        #[arg(long)]
        lexicon: PathBuf,
        /// TSV of ngram<TAB>category rows
        #[arg(long)]
        accepted: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct OverrideArgs {
    #[arg(long)]
    workdir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    scheme: Option<u8>,
    /// Model kinds to train (repeatable)
    #[arg(long = "model")]
    models: Vec<String>,
}

#[derive(Clone)]
struct ModelArg(ModelKind);

impl std::str::FromStr for ModelArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<ModelKind>().map(ModelArg).map_err(|e| e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("lexiforge: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest { manifest, out, keywords, max_depth, url_excludes, no_homepage_only } => {
            let mut rules = FilterRules::default();
            if let Some(keywords) = keywords {
                rules.seed_keywords = keywords;
            }
            if let Some(depth) = max_depth {
                rules.max_depth = depth;
            }
            rules.url_excludes = url_excludes;
            if no_homepage_only {
                rules.homepage_only = false;
            }
            commands::cmd_ingest(&manifest, &out, &rules)
        }
        Command::Lexicon { action } => match action {
            LexiconAction::Load { file, out, lemmas } => {
                commands::cmd_lexicon_load(&file, &out, &lemmas)
            }
            LexiconAction::Bootstrap { corpus, out, max_n, min_freq } => {
                commands::cmd_lexicon_bootstrap(&corpus, &out, max_n as usize, min_freq)
            }
            LexiconAction::Merge { lexicon, accepted, out } => {
                commands::cmd_lexicon_merge(&lexicon, &accepted, &out)
            }
        },
        Command::Annotate { corpus, lexicon, out, lemmas, abbreviations } => {
            commands::cmd_annotate(&corpus, &lexicon, &out, &lemmas, &abbreviations)
        }
        Command::Blocks { annotations, lexicon, embeddings, out, threshold } => {
            commands::cmd_blocks(&annotations, &lexicon, &embeddings, &out, threshold)
        }
        Command::Split { blocks, lexicon, scheme, seed, out } => {
            commands::cmd_split(&blocks, &lexicon, scheme, seed, &out)
        }
        Command::Train {
            model,
            train,
            dev,
            out,
            dev_fraction,
            seed,
            epochs,
            batch_size,
            learning_rate,
            patience,
            min_freq,
        } => {
            let mut cfg = TrainConfig::default();
            if let Some(seed) = seed {
                cfg.rng_seed = seed;
            }
            if let Some(epochs) = epochs {
                cfg.max_epochs = epochs;
            }
            if let Some(batch_size) = batch_size {
                cfg.batch_size = batch_size;
            }
            if let Some(learning_rate) = learning_rate {
                cfg.learning_rate = learning_rate;
            }
            if let Some(patience) = patience {
                cfg.patience = patience;
            }
            if let Some(min_freq) = min_freq {
                cfg.vocab_min_freq = min_freq;
            }
            commands::cmd_train(
                model.0,
                &train,
                &dev,
                &out,
                &lexiforge_core::tagger::CnnConfig::default(),
                &cfg,
                dev_fraction,
            )
        }
        Command::Tag { model, input, out, scheme } => {
            commands::cmd_tag(&model, &input, &out, scheme)
        }
        Command::Extract {
            predictions,
            blocks,
            lexicon,
            embeddings,
            out,
            threshold,
            keywords,
            model_id,
            scheme,
            lemmas,
        } => {
            let keywords = keywords.unwrap_or_else(|| {
                lexiforge_core::ingest::DEFAULT_KEYWORDS.map(String::from).to_vec()
            });
            let meta = match (model_id, scheme) {
                (Some(m), Some(s)) => Some((m, s)),
                (None, None) => None,
                _ => {
                    return Err(CliError::usage(
                        "--model-id and --scheme must be given together",
                    ))
                }
            };
            commands::cmd_extract(
                &predictions, &blocks, &lexicon, &embeddings, &out, threshold, &keywords, meta,
                &lemmas,
            )
        }
        Command::Review { candidates, state, replay, reviewer, blocks } => {
            commands::cmd_review(&candidates, &state, &replay, &reviewer, &blocks)
        }
        Command::Eval { predictions, out, model_id, scheme } => {
            let meta = match (model_id, scheme) {
                (Some(m), Some(s)) => Some((m, s)),
                (None, None) => None,
                _ => {
                    return Err(CliError::usage(
                        "--model-id and --scheme must be given together",
                    ))
                }
            };
            commands::cmd_eval(&predictions, &out, meta)
        }
        Command::Pipeline { config, overrides, dry_run } => {
            let mut cfg = PipelineConfig::load(&config)?;
            cfg.apply(&Overrides {
                workdir: overrides.workdir,
                seed: overrides.seed,
                threshold: overrides.threshold,
                scheme: overrides.scheme,
                models: if overrides.models.is_empty() { None } else { Some(overrides.models) },
            });
            commands::cmd_pipeline(&cfg, dry_run)
        }
        Command::Synth { out, web_docs, pdf_docs, seed } => {
            let corpus = lexiforge_core::synth::generate(&lexiforge_core::synth::SynthConfig {
                web_docs,
                pdf_docs,
                seed,
                ..Default::default()
            });
            let paths = corpus
                .write_to(&out)
                .map_err(|e| CliError::data(format!("{}: {e}", out.display())))?;
            println!(
                "wrote {} documents, {}, {}, {}",
                web_docs + pdf_docs,
                paths.manifest.display(),
                paths.lexicon.display(),
                paths.embeddings.display()
            );
            Ok(())
        }
    }
}
