use std::path::PathBuf;

use thiserror::Error;

use crate::spinor::SpinorField;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: generators {0:?} and {1:?} are degenerate")]
    InvalidLattice([f64; 2], [f64; 2]),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("size error: requested {requested} eigenpairs but the grid only carries {available}")]
    Size { requested: usize, available: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("iteration limit reached after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    IterationLimit {
        iterations: usize,
        grad_norm: f64,
        value: f64,
        best: Box<SpinorField>,
    },

    #[error("continuation step at p = {p} failed: {reason}")]
    ContinuationStep {
        p: f64,
        reason: String,
        /// `(p, lambda, sup|phi|)` for every exponent reached before the failure.
        trace: Vec<(f64, f64, f64)>,
    },

    #[error("refusing to integrate: closedness residual {residual:.3e} exceeds {tolerance:.3e}")]
    NotClosed { residual: f64, tolerance: f64 },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
