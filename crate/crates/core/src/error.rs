//! Error type shared across the crate.

use core::fmt;

/// Everything that can go wrong when building distributions, models, or
/// running training and probes.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or feature dimension did not match what the receiver expects.
    DimMismatch { expected: usize, got: usize },
    /// A flat parameter vector had the wrong length.
    LengthMismatch { expected: usize, got: usize },
    /// The same feature coordinates carry different labels across components.
    LabelConflict { point_index: usize },
    /// A distribution failed a structural invariant (mass sum, empty support,
    /// bad label, non-positive mass, bad mixture weights).
    InvalidDistribution(&'static str),
    /// `gen_counterexample_family` requires an even K >= 2.
    InvalidK(usize),
    /// A loss or parameter became non-finite at the given optimizer step.
    NonFinite { step: usize },
    /// A probe or span restriction selected no features.
    EmptyRestriction,
    /// Brute-force oracles only handle small supports.
    SupportTooLarge { size: usize, max: usize },
    /// The cancellation probe needs at least one nonzero component covariance.
    AllZeroCovs,
    /// A latent functional is constant on the evaluation support.
    DegenerateVariance,
    /// A convex solve failed to reach its gradient tolerance.
    NoConvergence { grad_norm_bits: u64 },
}

impl Error {
    pub(crate) fn no_convergence(grad_norm: f64) -> Self {
        Error::NoConvergence {
            grad_norm_bits: grad_norm.to_bits(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            Error::LabelConflict { point_index } => write!(
                f,
                "label conflict: support point {point_index} appears with both labels"
            ),
            Error::InvalidDistribution(msg) => write!(f, "invalid distribution: {msg}"),
            Error::InvalidK(k) => write!(f, "invalid K = {k}: must be even and >= 2"),
            Error::NonFinite { step } => {
                write!(f, "non-finite loss or parameter at step {step}")
            }
            Error::EmptyRestriction => write!(f, "feature restriction is empty"),
            Error::SupportTooLarge { size, max } => {
                write!(f, "support of {size} points exceeds brute-force limit {max}")
            }
            Error::AllZeroCovs => write!(f, "all component covariances are zero"),
            Error::DegenerateVariance => write!(f, "latent functional has zero variance"),
            Error::NoConvergence { grad_norm_bits } => write!(
                f,
                "convex solve stalled at gradient norm {}",
                f64::from_bits(*grad_norm_bits)
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
