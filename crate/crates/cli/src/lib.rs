//! The `soc` command-line tool and its JSON-over-HTTP service.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod serve;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use soc_core::model::{Checkpoint, Head, Prediction, Predictor};
use soc_core::textprep::Vocabulary;

pub use args::{Cli, Precision};
pub use error::{CliError, CliResult};

/// A loaded model at either precision.
#[derive(Debug, Clone)]
pub enum AnyPredictor {
    F32(Predictor<f32>),
    F64(Predictor<f64>),
}

impl AnyPredictor {
    pub fn predict(&self, text: &str) -> soc_core::Result<Prediction> {
        match self {
            AnyPredictor::F32(p) => p.predict(text),
            AnyPredictor::F64(p) => p.predict(text),
        }
    }

    pub fn head(&self) -> Head {
        match self {
            AnyPredictor::F32(p) => p.weights.config.head,
            AnyPredictor::F64(p) => p.weights.config.head,
        }
    }

    /// Loads a checkpoint and its vocabulary (`<checkpoint>.vocab` unless
    /// given), refusing a vocabulary the model was not trained with.
    pub fn load(checkpoint: &Path, vocab: Option<&Path>, precision: Precision) -> soc_core::Result<Self> {
        let vocab_path = vocab.map(Path::to_path_buf).unwrap_or_else(|| vocab_path_for(checkpoint));
        let vocab = Vocabulary::load(&vocab_path)?;
        Ok(match precision {
            Precision::F32 => AnyPredictor::F32(Predictor::from_checkpoint(Checkpoint::load(checkpoint)?, vocab)?),
            Precision::F64 => AnyPredictor::F64(Predictor::from_checkpoint(Checkpoint::load(checkpoint)?, vocab)?),
        })
    }
}

/// Where `train` writes the vocabulary belonging to `checkpoint`.
pub fn vocab_path_for(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.as_os_str().to_owned();
    name.push(".vocab");
    PathBuf::from(name)
}

/// Parses `argv` and runs the chosen subcommand, writing results to `out`.
/// Help and version requests print to `out` and succeed.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            write!(out, "{e}").map_err(error::stdout_err)?;
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string())),
    };
    commands::execute(cli, out)
}
