use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown term `{0}`")]
    UnknownTerm(String),

    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("infeasible point: coordinate {index} = {value} outside [{lo}, {hi}]")]
    Infeasible { index: usize, value: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("invalid config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl std::fmt::Display, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { path: path.to_string(), line, message: message.into() }
    }
}
