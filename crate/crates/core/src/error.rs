use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("covariance not positive definite: pivot {pivot} has value {value:e} after jitter")]
    Factorization { pivot: usize, value: f64 },

    #[error("circulant embedding eigenvalue {value:e} at index {index} is below the clamp tolerance")]
    Embedding { index: usize, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("quadrature cross-validation failed: {first} vs {second} (relative gap {relative:e})")]
    CrossValidation {
        first: f64,
        second: f64,
        relative: f64,
    },

    #[error("precision not reached: {0}")]
    Precision(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
