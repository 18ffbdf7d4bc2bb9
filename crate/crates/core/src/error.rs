use std::io;

use thiserror::Error;

/// Errors produced by the solvers, the special functions and the data readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence after {iterations} iterations: {what}")]
    Convergence { what: String, iterations: usize },

    #[error("non-finite value in {0}")]
    Numerical(String),

    #[error("factorization failed on block {block}: non-positive pivot")]
    Factorization { block: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("class {0} does not appear in the dataset")]
    UnknownClass(f64),

    #[error("dataset has a single class; at least two are required")]
    DegenerateDataset,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("reference run did not converge (KKT residual {kkt_residual:e})")]
    NonConvergence { kkt_residual: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numerical(what.to_string()))
    }
}
