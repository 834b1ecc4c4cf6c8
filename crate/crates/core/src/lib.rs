//! Certified univalent (schlicht) disks for heat maps.
//!
//! The crate builds exact solutions of the heat equation, estimates the
//! Takahashi constant of a map from sampled ball maxima, constructs the
//! growth-factor radius sequences, issues contraction certificates with the
//! closed-form radii, inverts the map on certified disks with a frozen-
//! Jacobian chord iteration, and reproduces the explicit constants behind
//! the final lower bound.
//!
//! Everything is deterministic given a seed: sampling uses offset Halton
//! sequences, reductions are associative with index tie-breaking, and term
//! sums are canonicalized before compensation.

pub mod bounds;
pub mod caloric;
pub mod contraction;
pub mod error;
pub mod fdcheck;
pub mod gallery;
pub mod linalg;
pub mod radii;
pub mod sampler;
pub mod takahashi;

pub use bounds::{BlochBoundReport, ConstantsOptimum, WorstCaseBound};
pub use caloric::{
    heat_kernel, heat_polynomial_1d, CaloricComponent, HeatMap, MultiIndex, SmoothMap,
    SpaceTimePoint, Term,
};
pub use contraction::{
    chord_solve, ChordSolution, ContractionReport, SchlichtCertificate, SchlichtReport,
};
pub use error::{CoreError, Result};
pub use linalg::{invert, spectral_summary, Matrix, SpectralSummary};
pub use radii::{build_sequences, gamma_from_r0, r_from_gamma, r_gamma_lower_bound, RadiiSequence};
pub use takahashi::{ball_max, check_wu_inequalities, estimate_k, BallMaxRecord, KEstimate};
