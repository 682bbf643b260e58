use thiserror::Error;

/// Errors produced by the covariance-level toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("number of modes must be at least 1")]
    ZeroModes,

    #[error("matrix must be square with even dimension, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("covariance matrix violates the uncertainty principle (min eigenvalue of gamma + i*Omega is {min_eigenvalue:e})")]
    Unphysical { min_eigenvalue: f64 },

    #[error("matrix is not symplectic (max deviation of S Omega S^T from Omega is {deviation:e})")]
    NotSymplectic { deviation: f64 },

    #[error("{name} = {value} is outside the allowed range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("mode selection must be nonempty")]
    EmptySelection,

    #[error("invalid Gaussian channel: {0}")]
    InvalidChannel(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid search configuration: {0}")]
    InvalidSearch(String),

    /// Unparseable textual argument (grid, family or method name).
    #[error("{0}")]
    Parse(String),

    #[error("malformed JSON: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
