//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by construction, evaluation, and certification.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("spatial dimension must be in 1..=8, got {0}")]
    DimensionOutOfRange(usize),

    #[error("heat kernel evaluated at its singularity (x, t) = (0, 0)")]
    KernelSingularity,

    #[error("kernel source must lie strictly outside the closed unit ball (norm {0})")]
    KernelSourceInsideBall(f64),

    #[error("polynomial term of total degree {0} exceeds the supported maximum {1}")]
    PolyDegreeTooHigh(u32, u32),

    #[error("derivative order {0} exceeds the supported maximum {1}")]
    DerivativeOrderTooHigh(u32, u32),

    #[error("map has {found} components, expected {expected} for dimension m = {m}")]
    ComponentCountMismatch {
        m: usize,
        expected: usize,
        found: usize,
    },

    #[error("term shape does not match dimension m = {m}: {reason}")]
    TermShapeMismatch { m: usize, reason: String },

    #[error("Jacobian at the origin is numerically singular (|det| = {0:.3e})")]
    SingularAtOrigin(f64),

    #[error("matrix is near-singular: smallest singular value {lambda_min:.3e}")]
    NearSingular { lambda_min: f64 },

    #[error("matrix rows do not form a square matrix")]
    NotSquare,

    #[error("gamma must exceed 1, got {0}")]
    GammaOutOfRange(f64),

    #[error("r0 must lie in (0, 1), got {0}")]
    R0OutOfRange(f64),

    #[error("ball maximum of |det F'| at r = {r} fell below 1e-14")]
    DegenerateDeterminant { r: f64 },

    #[error(
        "sampled ball maxima drop by a relative {drop:.3e} near r = {r}; \
         increase the sample budget"
    )]
    NonMonotoneMaxima { r: f64, drop: f64 },

    #[error("radius sequence exceeded {0} terms without terminating")]
    SequenceTooLong(usize),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "chord iterate {iteration} left the certified ball: \
         distance {distance:.6e} > eta = {eta:.6e}"
    )]
    LeftContractionBall {
        iteration: usize,
        distance: f64,
        eta: f64,
    },

    #[error("chord iteration did not converge within {0} iterations (residual {1:.3e})")]
    NoConvergence(usize, f64),

    #[error("target lies outside the certified disk: distance {dist:.6e} > rho = {rho:.6e}")]
    TargetOutsideDisk { dist: f64, rho: f64 },

    #[error("family member {index} has zero sup norm on the sample ball")]
    ZeroSupNorm { index: usize },

    #[error("no sequence index satisfies the certificate selection inequality")]
    NoAdmissibleIndex,

    #[error("certificate invalid: {0}")]
    InvalidCertificate(String),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
