//! `cuekit` — fidelity assessment for strategy-training transcripts.
//!
//! Exit codes: 0 success, 1 domain failure (gate/validation/format), 2 usage
//! error.

mod commands;
mod io;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cuekit",
    version,
    about = "Verbal-cue fidelity assessment toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ManifestOpt {
    /// Write a run manifest (inputs, digests, seeds, versions) to this path.
    #[arg(long, global = false)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a transcript's utterance texts in place of the raw ASR output.
    Clean {
        /// Transcript file.
        transcript: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        manifest: ManifestOpt,
    },
    /// Corpus construction and bookkeeping.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Lexicon utilities.
    #[command(subcommand)]
    Lexicon(LexiconCommand),
    /// Classify a corpus or transcript.
    #[command(subcommand)]
    Classify(ClassifyCommand),
    /// Train the baseline classifier.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 4)]
        epochs: usize,
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 1e-4)]
        l2: f64,
        #[arg(long, default_value_t = 1)]
        min_freq: usize,
        #[arg(long, default_value_t = 64)]
        max_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        manifest: ManifestOpt,
    },
    /// Inter-annotator agreement with an optional acceptance gate.
    Agreement {
        /// First annotator's annotation file.
        #[arg(long)]
        a: PathBuf,
        /// Second annotator's annotation file.
        #[arg(long)]
        b: PathBuf,
        /// Fail (exit 1) unless alpha exceeds this threshold.
        #[arg(long)]
        min_alpha: Option<f64>,
        /// Transcript(s) whose utterance counts turn unannotated utterances
        /// into None units; repeatable.
        #[arg(long)]
        transcript: Vec<PathBuf>,
        /// Write the full agreement result as JSON.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Merge two annotation sets with a resolution file into consensus gold.
    Consensus {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        resolutions: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        manifest: ManifestOpt,
    },
    /// Score predictions against a gold corpus.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Averaging mode: macro, micro, or weighted.
        #[arg(long, default_value = "macro")]
        mode: String,
        /// Add the per-discipline table (plus average and pooled rows).
        #[arg(long)]
        by_discipline: bool,
        /// Write the metrics report as JSON.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        manifest: ManifestOpt,
    },
    /// Produce a per-session fidelity report.
    Report {
        #[arg(long)]
        transcript: PathBuf,
        /// Classify with the lexicon rule classifier.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Classify with a trained baseline model file.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Use preloaded predictions keyed `<session>:<utterance index>`.
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        /// structured (JSON, lossless) or text (human-readable).
        #[arg(long, default_value = "structured")]
        format: String,
        #[command(flatten)]
        manifest: ManifestOpt,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Aggregate annotated transcripts into a gold corpus.
    Build {
        /// Directory of transcript files.
        #[arg(long)]
        transcripts: PathBuf,
        /// Annotation file (consensus or single-annotator).
        #[arg(long)]
        annotations: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the unannotated-utterance pool as a NONE corpus.
        #[arg(long)]
        none_pool: Option<PathBuf>,
        #[command(flatten)]
        manifest: ManifestOpt,
    },
    /// Add sampled none examples until counts balance.
    Balance {
        #[arg(long = "in")]
        input: PathBuf,
        /// None-pool corpus to sample from.
        #[arg(long)]
        pool: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        manifest: ManifestOpt,
    },
    /// Deterministic train/validation split.
    Split {
        /// Corpus file: example-level split stratified by label.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Transcript directory: document-level split stratified by
        /// discipline; outputs are session-id listings.
        #[arg(long)]
        transcripts: Option<PathBuf>,
        #[arg(long, default_value_t = 0.7)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_val: PathBuf,
        #[command(flatten)]
        manifest: ManifestOpt,
    },
    /// Word-length statistics of a corpus.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated quantiles between 0 and 1.
        #[arg(long, default_value = "0.5,0.75,0.9")]
        quantiles: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic labeled corpus from a lexicon.
    Synth {
        #[arg(long)]
        lexicon: PathBuf,
        /// Per-label counts, e.g. G:200,D:200,N:200.
        #[arg(long)]
        counts: String,
        /// Fraction of tokens replaced with random vocabulary tokens.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        manifest: ManifestOpt,
    },
}

#[derive(Subcommand)]
enum LexiconCommand {
    /// Parse and compile a lexicon, reporting grammar errors.
    Check { file: PathBuf },
}

#[derive(Subcommand)]
enum ClassifyCommand {
    /// Classify with the lexicon rule classifier.
    Rule {
        #[arg(long)]
        lexicon: PathBuf,
        /// Corpus file or transcript file (detected by header).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        manifest: ManifestOpt,
    },
    /// Classify a corpus with a trained baseline model.
    Model {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        manifest: ManifestOpt,
    },
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Clean {
            transcript,
            out,
            manifest,
        } => commands::clean(&transcript, &out, &manifest.manifest),
        Command::Corpus(corpus) => match corpus {
            CorpusCommand::Build {
                transcripts,
                annotations,
                out,
                none_pool,
                manifest,
            } => commands::corpus_build(
                &transcripts,
                &annotations,
                &out,
                &none_pool,
                &manifest.manifest,
            ),
            CorpusCommand::Balance {
                input,
                pool,
                seed,
                out,
                manifest,
            } => commands::corpus_balance(&input, &pool, seed, &out, &manifest.manifest),
            CorpusCommand::Split {
                input,
                transcripts,
                fraction,
                seed,
                out_train,
                out_val,
                manifest,
            } => commands::corpus_split(
                &input,
                &transcripts,
                fraction,
                seed,
                &out_train,
                &out_val,
                &manifest.manifest,
            ),
            CorpusCommand::Stats {
                input,
                quantiles,
                out,
            } => commands::corpus_stats(&input, &quantiles, &out),
            CorpusCommand::Synth {
                lexicon,
                counts,
                noise,
                seed,
                out,
                manifest,
            } => commands::corpus_synth(&lexicon, &counts, noise, seed, &out, &manifest.manifest),
        },
        Command::Lexicon(LexiconCommand::Check { file }) => commands::lexicon_check(&file),
        Command::Classify(classify) => match classify {
            ClassifyCommand::Rule {
                lexicon,
                input,
                out,
                manifest,
            } => commands::classify_rule(&lexicon, &input, &out, &manifest.manifest),
            ClassifyCommand::Model {
                model,
                input,
                out,
                manifest,
            } => commands::classify_model(&model, &input, &out, &manifest.manifest),
        },
        Command::Train {
            corpus,
            epochs,
            batch,
            lr,
            l2,
            min_freq,
            max_len,
            seed,
            out,
            manifest,
        } => commands::train(
            &corpus,
            epochs,
            batch,
            lr,
            l2,
            min_freq,
            max_len,
            seed,
            &out,
            &manifest.manifest,
        ),
        Command::Agreement {
            a,
            b,
            min_alpha,
            transcript,
            out,
        } => commands::agreement(&a, &b, min_alpha, &transcript, &out),
        Command::Consensus {
            a,
            b,
            resolutions,
            out,
            manifest,
        } => commands::consensus(&a, &b, &resolutions, &out, &manifest.manifest),
        Command::Evaluate {
            gold,
            pred,
            mode,
            by_discipline,
            out,
            manifest,
        } => commands::evaluate(&gold, &pred, &mode, by_discipline, &out, &manifest.manifest),
        Command::Report {
            transcript,
            lexicon,
            model,
            pred,
            out,
            format,
            manifest,
        } => commands::report(
            &transcript,
            &lexicon,
            &model,
            &pred,
            &out,
            &format,
            &manifest.manifest,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
