//! Error type shared by all estimation routines.

use std::fmt;

/// Errors raised by the estimation library.
///
/// Numerical failures carry enough context to identify the offending
/// quantity (and, for inversions, a 1-norm condition estimate) without
/// holding on to the matrices themselves.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand dimensions do not conform.
    DimensionMismatch {
        what: String,
        expected: String,
        got: String,
    },
    /// A matrix that must be inverted was singular (or produced a
    /// non-finite inverse). `condition` is the 1-norm condition estimate
    /// when one could be formed.
    SingularMatrix { what: String, condition: f64 },
    /// A function evaluation produced NaN or infinity.
    NonFinite { what: String },
    /// A covariance failed its symmetric / positive-semidefinite check.
    InvalidCovariance { what: String, detail: String },
    /// Both variances of a 1D Gaussian product were zero.
    DegenerateProduct,
    /// Unknown built-in model or filter name; `valid` lists the accepted ones.
    UnknownName {
        kind: &'static str,
        got: String,
        valid: Vec<&'static str>,
    },
    /// The requested filter cannot run on the scenario's model.
    IncompatibleFilter { filter: String, model: String },
    /// A configuration value failed validation; `field` is the path to it.
    InvalidConfig { field: String, detail: String },
    /// Probability mass escaped the grid domain during prediction.
    GridMassLeak { leaked: f64, limit: f64 },
    /// Pointwise multiplication left no probability mass on the grid.
    GridAllZero,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(f, "{what}: dimension mismatch, expected {expected}, got {got}"),
            Error::SingularMatrix { what, condition } => {
                write!(f, "{what} is singular (1-norm condition estimate {condition:e})")
            }
            Error::NonFinite { what } => write!(f, "{what} is not finite"),
            Error::InvalidCovariance { what, detail } => {
                write!(f, "{what} is not a valid covariance: {detail}")
            }
            Error::DegenerateProduct => {
                write!(f, "product of two zero-variance Gaussians is degenerate")
            }
            Error::UnknownName { kind, got, valid } => {
                write!(f, "unknown {kind} {got:?}; valid names: {}", valid.join(", "))
            }
            Error::IncompatibleFilter { filter, model } => {
                write!(f, "filter {filter:?} cannot run on model {model:?}")
            }
            Error::InvalidConfig { field, detail } => write!(f, "{field}: {detail}"),
            Error::GridMassLeak { leaked, limit } => write!(
                f,
                "probability mass {leaked:e} leaked past the grid bounds (limit {limit:e}); widen the domain"
            ),
            Error::GridAllZero => {
                write!(f, "observation is incompatible with the grid support (all-zero posterior)")
            }
        }
    }
}

impl std::error::Error for Error {}

impl Error {
    pub(crate) fn dims(what: &str, expected: impl fmt::Display, got: impl fmt::Display) -> Self {
        Error::DimensionMismatch {
            what: what.to_string(),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
