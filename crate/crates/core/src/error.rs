use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{what} evaluated outside its domain: {detail}")]
    Domain { what: &'static str, detail: String },

    /// The quadrature did not reach its tolerance. `best` is still the best
    /// available estimate and may be used by lenient callers.
    #[error("quadrature for {what} did not converge (best estimate {best:e}, abs error {abs_error:e})")]
    NonConvergence {
        what: &'static str,
        best: f64,
        abs_error: f64,
    },

    #[error("density {value:e} at x = {x} is below the underflow threshold")]
    Underflow { x: f64, value: f64 },

    #[error("x = {x} coincides with the mode shift; the derivative representation is singular there")]
    SingularPoint { x: f64 },

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
}

impl Error {
    /// Best estimate carried by a non-convergence error.
    pub fn best_estimate(&self) -> Option<f64> {
        match self {
            Error::NonConvergence { best, .. } => Some(*best),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
