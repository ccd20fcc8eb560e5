use thiserror::Error;

/// Errors produced by the key-rate library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "Fock truncation at cutoff {cutoff} leaves tail mass {deficit:e} above tolerance {tolerance:e}"
    )]
    TruncationExceeded {
        cutoff: usize,
        deficit: f64,
        tolerance: f64,
    },

    #[error("unphysical covariance matrix: symplectic eigenvalue {value} < 1")]
    UnphysicalCovariance { value: f64 },

    #[error("non-positive variance {value} in {context}")]
    NonPositiveVariance { context: &'static str, value: f64 },

    #[error("target mean loss {target_db} dB is not above the achievable floor {floor_db} dB")]
    BelowLossFloor { target_db: f64, floor_db: f64 },

    #[error("{what} did not converge: {detail}")]
    NoConvergence { what: &'static str, detail: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    /// True for failures of an iterative or quadrature procedure, as opposed to
    /// bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(self, Error::NoConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
