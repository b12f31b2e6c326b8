use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: argument {value} is outside the domain")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} did not converge after {iterations} iterations (estimate {estimate:e}, error {error:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        estimate: f64,
        error: f64,
    },

    #[error("{what} overflows the floating-point range (log value {log_value})")]
    Overflow { what: &'static str, log_value: f64 },

    #[error("condition violated: {0}")]
    Condition(String),

    #[error("test function '{name}' does not provide {needed}")]
    Smoothness { name: String, needed: String },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }
}
