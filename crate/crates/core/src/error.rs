use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the optimizer, problem suite and benchmarking layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("no reference data for problem k={k} n={n} instance={instance} (looked for {path})")]
    NoReference {
        k: usize,
        n: usize,
        instance: usize,
        path: PathBuf,
    },

    #[error("records have mixed dimensions ({0} and {1})")]
    MixedDimensions(usize, usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
