use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("DIMACS parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("assignment has length {got}, instance has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },

    #[error("problem size {n} exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("generator exhausted after {attempts} attempts: {reason}")]
    GeneratorExhausted { attempts: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Lanczos did not converge after {iterations} iterations (best residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("state vector became non-finite at step {step}")]
    NonFinite { step: usize },

    #[error("success-probability target unreachable: {0}")]
    Unreachable(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::InvalidInstance(_) => "invalid_instance",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::TooLarge { .. } => "too_large",
            Error::GeneratorExhausted { .. } => "generator_exhausted",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NonFinite { .. } => "non_finite",
            Error::Unreachable(_) => "unreachable",
            Error::Fit(_) => "fit",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
