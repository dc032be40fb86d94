use thiserror::Error;

/// Errors raised by kernel evaluation, covariance assembly, sampling,
/// regression and hyperparameter search.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input to {context}")]
    NonFinite { context: &'static str },

    #[error("input {t} outside the partition domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("kernel of string {string} is degenerate ({reason})")]
    Degenerate { string: usize, reason: String },

    #[error("ill-conditioned matrix in {context}: factorization failed after jitter retries")]
    IllConditioned { context: &'static str },

    #[error("kernel does not expose derivative blocks: {kernel}")]
    DerivativesUnsupported { kernel: String },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: String, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
