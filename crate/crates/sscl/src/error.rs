//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Invalid configuration or precondition violation detected before any
    /// computation starts. Maps to exit code 2 in the CLI.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric (max |A - A^T| = {max_abs:.3e})")]
    NotSymmetric { max_abs: f64 },

    #[error("quadratic term is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    /// Feature-sign search hit its iteration cap. Carries the best iterate
    /// found so far and its optimality residual.
    #[error("solver exceeded {iterations} iterations (best residual {residual:.3e})")]
    IterationCap {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("convexity violated at point {index}: 2*beta - delta_i^2 = {value:.3e} < 0")]
    ConvexityViolated { index: usize, value: f64 },

    #[error("model file {path}: {msg}")]
    ModelFormat { path: String, msg: String },

    #[error("{0}")]
    Runtime(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap with a human-readable context line (e.g. which class or fold
    /// was being trained when the failure occurred).
    pub fn with_context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors that indicate bad user input rather than a runtime
    /// failure; the CLI exits with code 2 for these.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Config(_) | Error::Dimension(_) => true,
            Error::Context { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
