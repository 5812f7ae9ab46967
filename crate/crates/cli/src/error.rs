use soc_core::SocError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] SocError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot start server on {addr}: {source}")]
    Startup {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 1 for bad input (files, flags, data), 2 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_input_error() => 1,
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Internal(format!("writing output: {e}"))
}
