use std::path::PathBuf;

use crate::graph::VideoId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("negative value {value} in {what} at index {index}")]
    Negative {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("solver did not converge within {cap} iterations")]
    NoConvergence { cap: usize, best: Vec<f64> },

    #[error("non-finite message on edge {from} -> {to} at iteration {iteration}")]
    NonFiniteMessage {
        from: VideoId,
        to: VideoId,
        iteration: usize,
    },

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("{source_name}: record {record}: {message}")]
    Record {
        source_name: String,
        record: usize,
        message: String,
    },

    #[error("{0}: no records")]
    NoRecords(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn record(
        source_name: impl Into<String>,
        record: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Record {
            source_name: source_name.into(),
            record,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
