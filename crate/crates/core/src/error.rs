use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cone membership violated: {0}")]
    Cone(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("outside closed-form range: {0}")]
    OutOfRange(String),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("lp solver: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects NaN at API boundaries; infinities pass through.
pub(crate) fn check_not_nan(x: f64, what: &str) -> Result<f64> {
    if x.is_nan() {
        Err(Error::Invalid(format!("{what} is NaN")))
    } else {
        Ok(x)
    }
}
