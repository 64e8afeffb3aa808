use num_complex::Complex64;
use thiserror::Error;

use crate::sim::TrajectoryRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a type invariant (negative weight, bad sign, ...).
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: String,
        expected: String,
        found: String,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The coupling matrix could not be diagonalized reliably.
    #[error("degenerate eigenstructure: {0}")]
    Degenerate(String),

    #[error("synthesis failed: {0}")]
    Synthesis(String),

    #[error("pole placement failed: uncontrollable mode at {mode}")]
    Uncontrollable { mode: Complex64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("closed loop is not Hurwitz: eigenvalue {eigenvalue}")]
    NotHurwitz { eigenvalue: Complex64 },

    /// Integration produced a non-finite or runaway state. The samples recorded
    /// before the failure are kept in `partial`.
    #[error("simulation diverged at t = {time}")]
    Divergence {
        time: f64,
        partial: Box<TrajectoryRecord>,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn dimension(
        what: impl Into<String>,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::Dimension {
            what: what.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for errors caused by malformed or out-of-contract input, as opposed
    /// to a numerical or analytical failure on valid input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. } | Error::Dimension { .. } | Error::Precondition(_)
        )
    }
}
