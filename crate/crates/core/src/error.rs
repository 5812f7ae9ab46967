use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SocError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SocError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error in {source_name} at line {line}: {message}")]
    Format {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at step {step} (epoch {epoch}, batch {batch}): loss = {loss}")]
    Diverged {
        step: u64,
        epoch: usize,
        batch: usize,
        loss: f64,
    },

    #[error("checkpoint error: bad magic bytes {found:?}, expected \"SOCM\"")]
    BadMagic { found: [u8; 4] },

    #[error("checkpoint error: unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("checkpoint error: {0}")]
    Shape(String),
}

impl SocError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SocError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        SocError::Format {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by the caller's data or arguments rather than
    /// by a failure inside the engine.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, SocError::NonFinite(_) | SocError::Diverged { .. })
    }
}
