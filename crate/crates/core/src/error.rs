use thiserror::Error;

/// Errors raised by the cavity-dynamics solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge: estimate {estimate:.6e}, error {error:.3e} > tolerance {tolerance:.3e}")]
    QuadratureNonConvergence { estimate: f64, error: f64, tolerance: f64 },

    #[error("time stepping did not converge: halving dt changed max|u| by {change:.3e} (tolerance {tolerance:.3e})")]
    SolverNonConvergence { change: f64, tolerance: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigensolver(String),

    #[error("Fock cutoff {cutoff} too small: neglected weight {tail:.3e}")]
    CutoffTooSmall { cutoff: usize, tail: f64 },

    #[error("master equation trace drift {drift:.3e} at t = {time:.4}")]
    TraceDrift { drift: f64, time: f64 },

    #[error("master equation coefficients undefined at t = {time:.4} (|u| below threshold)")]
    SingularCoefficients { time: f64 },

    #[error("index {index} out of range for a grid of {len} samples")]
    IndexOutOfRange { index: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
