use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degree {degree} exceeds the reliability guard {guard} at cutoff {cutoff}")]
    DegreeGuard { degree: usize, guard: usize, cutoff: usize },
    #[error("operator is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("node solver did not converge for root {0}")]
    NoConvergence(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("missing coefficients: {0}")]
    MissingCoefficients(String),
    #[error("normalization failure: integral is {0}")]
    Normalization(f64),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
