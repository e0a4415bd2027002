use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while configuring, solving or writing results.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("inadmissible state: {0}")]
    Inadmissible(String),

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("factorization failed: pivot {pivot} is not positive ({value:.3e})")]
    Factorization { pivot: usize, value: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error on {path}: {message}")]
    Serialize { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
