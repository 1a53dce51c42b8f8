use thiserror::Error;

use crate::solver::NonconvergenceInfo;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A coordinate outside the valid range of a backend chart (e.g. `t < 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// The polar chart degenerates at this point; callers must use limiting values.
    #[error("coordinate singularity at t = {t}, theta = {theta}")]
    CoordinateSingularity { t: f64, theta: f64 },

    /// A backend produced fields that violate their own invariants.
    #[error("backend consistency error: {0}")]
    BackendConsistency(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },

    /// Input data (thickness, initial guesses, tables) is malformed.
    #[error("data error: {0}")]
    Data(String),

    #[error("non-finite integrand on simplex {simplex}")]
    NonFinite { simplex: usize },

    #[error("path is not a closed edge loop: {0}")]
    OpenPath(String),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("solver did not converge: {}", .0.reason)]
    Nonconvergence(Box<NonconvergenceInfo>),

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parameter(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by invalid input rather than by the computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::CoordinateSingularity { .. }
                | Error::Parameter { .. }
                | Error::Data(_)
                | Error::OpenPath(_)
                | Error::Unsupported(_)
        )
    }
}
