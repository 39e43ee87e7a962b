use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("infeasible degree: n={n}, d={d} (n*d must be even and d < n)")]
    InfeasibleDegree { n: usize, d: usize },

    #[error("graph generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("invalid qubit index: {0}")]
    Index(String),

    #[error("invalid depth p={0}, must be >= 1")]
    InvalidDepth(usize),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("empty histogram")]
    EmptyHistogram,

    #[error("unsupported parameter layout: {0}")]
    UnsupportedLayout(String),

    #[error("objective returned a non-finite value at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
