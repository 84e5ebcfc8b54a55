use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("{what} is outside its domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error(
        "cholesky generator is capped at {cap} steps (requested {n}); use the Davies-Harte generator"
    )]
    CholeskyCapExceeded { n: usize, cap: usize },

    #[error("covariance matrix is not positive definite at pivot {pivot} (value {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("circulant embedding has eigenvalue {value:e} at index {index} (largest {max:e})")]
    NegativeEigenvalue { index: usize, value: f64, max: f64 },

    #[error("coarse grid size {n} does not divide the fine grid size {n_fine}")]
    NotDivisor { n: usize, n_fine: usize },

    #[error("Feller condition 2k*theta > sigma^2 fails (m = {m})")]
    FellerViolated { m: f64 },

    #[error("implicit step has no positive root: m = {m} must exceed -1/2")]
    Unsolvable { m: f64 },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures of the noise generators' linear algebra.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. } | Error::NegativeEigenvalue { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
