//! Error type shared by every module of the engine.

use thiserror::Error;

/// Everything that can go wrong while setting up or evaluating a quantity.
///
/// Numerical routines never panic on bad user input; they return one of these
/// variants with enough context to locate the offending parameter or node.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0}: supported dimensions are 1, 2, 3")]
    UnsupportedDimension(usize),

    #[error("point {point:?} lies outside the open set; boundary distance is only defined for interior points")]
    OutsideDomain { point: Vec<f64> },

    #[error("sampling an unbounded domain requires a truncation in the plan")]
    UnboundedNeedsTruncation,

    #[error("variant `full` on an unbounded domain is rejected unless the plan opts into an explicit truncation")]
    FullVariantUnbounded,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite integrand sample at evaluation point {point:?} (outer node {node:?})")]
    NonFiniteSample { node: Vec<f64>, point: Vec<f64> },

    #[error("gradient unavailable for `{name}` ({reason})")]
    GradientUnavailable { name: String, reason: String },

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand used by validating constructors.
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
