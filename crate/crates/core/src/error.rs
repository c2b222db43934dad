use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter {index} out of range [0, 1]: {value}")]
    ParamOutOfRange { index: usize, value: f64 },

    #[error("expected {expected} values, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("vanishing curve speed at t = {t}")]
    Singularity { t: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("member {index} ({label}): {source}")]
    Member {
        index: usize,
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("evaluator unavailable: {0}")]
    Environment(String),

    #[error("external process timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("protocol error: {msg}")]
    Protocol { msg: String, output: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Coarse failure classes, used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Data,
    Numeric,
    External,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_)
            | Error::Singularity { .. }
            | Error::Degenerate(_)
            | Error::LayoutMismatch(_) => ErrorKind::Numeric,
            Error::Environment(_) | Error::Timeout(_) | Error::Protocol { .. } => {
                ErrorKind::External
            }
            Error::Member { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn member(index: usize, label: &str, source: Error) -> Self {
        Error::Member {
            index,
            label: label.to_string(),
            source: Box::new(source),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
