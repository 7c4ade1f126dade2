//! Error type shared by all modules of the crate.

use alloc::string::String;
use core::fmt;

/// Everything that can go wrong in the numerical core.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A point had a different dimension than the structure it was used with.
    DimMismatch {
        /// Dimension required by the receiver.
        expected: usize,
        /// Dimension actually supplied.
        got: usize,
    },
    /// Two paired collections disagree in length.
    LengthMismatch {
        /// Length of the first collection.
        left: usize,
        /// Length of the second collection.
        right: usize,
    },
    /// A parameter was out of range, non-finite, or otherwise unusable.
    InvalidParameter(String),
    /// Cholesky factorization failed even after the jitter ladder was
    /// exhausted.
    IllConditioned {
        /// Largest diagonal jitter that was attempted.
        jitter_limit: f64,
    },
    /// An operation that selects from candidates received none.
    EmptyCandidates,
    /// The acquisition rule cannot be used in the requested setting.
    UnsupportedRule(String),
    /// A rule that accumulates per-candidate state across iterations was run
    /// on a candidate set that changes between iterations.
    NonPersistentCandidates,
    /// A query point lies outside the domain of a discretization grid.
    OutOfDomain {
        /// Axis on which the coordinate is out of range.
        axis: usize,
        /// Offending coordinate value.
        value: f64,
    },
    /// A requested grid would exceed the configured memory cap.
    GridTooLarge {
        /// Number of points the grid would contain.
        points: u128,
        /// Configured cap.
        cap: u128,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::IllConditioned { jitter_limit } => write!(
                f,
                "matrix not positive definite even with jitter up to {jitter_limit:e}"
            ),
            Error::EmptyCandidates => write!(f, "empty candidate set"),
            Error::UnsupportedRule(msg) => write!(f, "unsupported rule: {msg}"),
            Error::NonPersistentCandidates => write!(
                f,
                "rule needs a candidate set that persists across iterations"
            ),
            Error::OutOfDomain { axis, value } => {
                write!(f, "coordinate {value} on axis {axis} is outside the grid domain")
            }
            Error::GridTooLarge { points, cap } => {
                write!(f, "grid of {points} points exceeds cap of {cap}")
            }
        }
    }
}

impl core::error::Error for Error {}
