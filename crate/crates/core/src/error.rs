use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {msg} (condition number {condition:.3e})")]
    NumericFailure { msg: String, condition: f64 },

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    /// No table row reaches the requested codeword error rate.
    #[error("target unreachable: no row with CER <= {epsilon:e} for m={m}, k={k}, n={n}")]
    TargetUnreachable { m: u32, k: usize, n: usize, epsilon: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing file {path}: {hint}")]
    MissingFile { path: PathBuf, hint: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors that stem from user configuration rather than runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::MissingFile { .. } | Error::Parse(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
