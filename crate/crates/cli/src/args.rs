use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use soc_core::model::Head;

#[derive(Debug, Parser)]
#[command(name = "soc", version, about = "Sentiment scoring for short social texts and token ranking")]
pub struct Cli {
    /// Seed for every random choice. Falls back to the config file, then SOC_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run configuration file with `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Floating-point precision for training and inference.
    #[arg(long, global = true, value_enum)]
    pub precision: Option<Precision>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    /// Sentiment140 CSV (target,id,date,flag,user,text).
    Sentiment140,
    /// `sentence<TAB>label` lines with label 0 or 1.
    Tsv,
    /// JSON lines with star rating and review text.
    Amazon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Arch {
    /// Full-size network (d=100, H=64, widths 3/4/5 with 64 filters, dense 128).
    Standard,
    /// Small network for quick experiments and tests.
    Micro,
}

impl std::str::FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset file.
    #[arg(long)]
    pub data: PathBuf,
    /// Dataset format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<DataFormat>,
    /// Field holding the star rating (amazon format).
    #[arg(long, default_value = "overall")]
    pub rating_field: String,
    /// Field holding the review text (amazon format).
    #[arg(long, default_value = "reviewText")]
    pub text_field: String,
    /// Use a seeded sample of at most this many examples.
    #[arg(long)]
    pub max_examples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Checkpoint file written by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Vocabulary file; defaults to `<checkpoint>.vocab`.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a vocabulary and matching embedding table from a dataset.
    Prepare {
        #[command(flatten)]
        data: DataArgs,
        /// Pre-trained vectors in GloVe text format.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Embedding width.
        #[arg(long)]
        embed_dim: Option<usize>,
        /// Minimum token frequency.
        #[arg(long)]
        min_count: Option<usize>,
        /// Directory receiving vocab.tsv and embeddings.txt.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train a model and write the best checkpoint.
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// Held-out data for model selection; otherwise a split of --data is used.
        #[arg(long)]
        eval_data: Option<PathBuf>,
        /// Fraction of --data held out when --eval-data is absent (0 selects on training data).
        #[arg(long)]
        eval_fraction: Option<f64>,
        /// Existing vocabulary; built from the training data when omitted.
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Pre-trained vectors in GloVe text format.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Minimum token frequency when building the vocabulary (default 1).
        #[arg(long)]
        min_count: Option<usize>,
        /// Output head: `softmax` (default) or `tanh`.
        #[arg(long)]
        head: Option<Head>,
        /// Network size (default standard).
        #[arg(long, value_enum)]
        arch: Option<Arch>,
        /// Embedding width (overrides the architecture default).
        #[arg(long)]
        embed_dim: Option<usize>,
        /// Keep the embedding table fixed.
        #[arg(long)]
        freeze_embeddings: bool,
        /// Number of epochs (default 300).
        #[arg(long)]
        epochs: Option<usize>,
        /// Minibatch size (default 2048).
        #[arg(long)]
        batch_size: Option<usize>,
        /// Adam learning rate (default 0.001).
        #[arg(long)]
        lr: Option<f64>,
        /// Checkpoint output path; the vocabulary is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch metric log (CSV); printed to stdout when omitted.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score a labelled dataset and print precision, recall and accuracy.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        data: DataArgs,
        /// Print CSV instead of a table.
        #[arg(long)]
        csv: bool,
    },
    /// Score texts given with --text, or one per stdin line.
    Predict {
        #[command(flatten)]
        model: ModelArgs,
        /// Text to score; may be repeated.
        #[arg(long)]
        text: Vec<String>,
    },
    /// Rank tokens by volume-adjusted sentiment over a date window.
    Rank {
        /// Comment store (JSON lines).
        #[arg(long)]
        store: PathBuf,
        /// First day of the window (inclusive).
        #[arg(long)]
        from: NaiveDate,
        /// Last day of the window (inclusive).
        #[arg(long)]
        to: NaiveDate,
        /// Model used for comments without a stored score.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Vocabulary file; defaults to `<checkpoint>.vocab`.
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Serve /score, /rank and /health over HTTP.
    Serve {
        #[command(flatten)]
        model: ModelArgs,
        /// Comment store used by /rank; empty when omitted.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Listen address (default 127.0.0.1:8080).
        #[arg(long)]
        addr: Option<String>,
    },
}
