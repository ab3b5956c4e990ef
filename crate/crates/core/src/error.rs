use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FexError {
    #[error("unsupported tree depth {0}; supported depths are 1, 2, 3")]
    UnsupportedDepth(usize),

    #[error("unknown operator `{0}`")]
    UnknownOperator(String),

    #[error("operator `{name}` is not valid at node {node} ({kind})")]
    OperatorKind {
        name: String,
        node: usize,
        kind: &'static str,
    },

    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("unknown problem `{0}`; known problems are poisson60, reactdiff60, semilinear55")]
    UnknownProblem(String),

    #[error("unknown pool `{0}`")]
    UnknownPool(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("covariance factorization failed after jitter {0:e}")]
    Factorization(f64),

    #[error("reference norm is zero; relative error undefined")]
    ZeroReference,

    #[error("candidate pool is empty after the search loop")]
    EmptyPool,

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, FexError>;

impl FexError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FexError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        FexError::Json {
            path: path.into(),
            source,
        }
    }
}
