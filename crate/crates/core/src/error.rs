use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("FCIDUMP line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("two-electron tensor is not positive semidefinite (pivot {pivot:e})")]
    NotPositiveSemidefinite { pivot: f64 },

    #[error("CI dimension {dim} exceeds the limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("Davidson did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("trial wave function has zero overlap with the walker")]
    ZeroOverlap,

    #[error("walker population collapsed: {0}")]
    Collapse(String),

    #[error("non-finite energy at block {block}: {detail}")]
    NonFinite { block: usize, detail: String },

    #[error("not enough data for blocking analysis: {have} blocks, need {need}")]
    InsufficientData { have: usize, need: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for validation problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Invalid(_) | Error::Io { .. } => 2,
            Error::DimensionOverflow { .. } => 2,
            _ => 3,
        }
    }
}
