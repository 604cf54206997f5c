//! Reverse information projections on finite grids.
//!
//! Everything in this crate operates on measures represented by densities over
//! a shared finite grid (a counting grid over integers or a quadrature grid
//! over a window of the real line). On top of that representation the crate
//! provides:
//!
//! * general finite-measure KL divergence and description gains, including
//!   the gain to the convex hull of a finite family ([`divergence`]);
//! * a greedy mixture algorithm that approximates the reverse information
//!   projection of a measure onto a convex family, with certified per-step
//!   bounds ([`projection`]);
//! * e-statistics: construction from likelihood ratios, verification against
//!   a family, strength comparison, and sequential simulation ([`evalue`]);
//! * constructions where the projection is a strict sub-probability measure
//!   ([`subprob`]);
//! * convergence-rate experiments relating integrated likelihood-ratio slack
//!   to information gain ([`ratelab`]).
//!
//! Integrals are accumulated in extended-real arithmetic ([`xreal::ExtReal`]):
//! positive and negative parts are tracked separately, divergence of exactly
//! one part yields a signed infinity, and divergence of both parts yields a
//! distinct `undefined` sentinel rather than a silent NaN.

#![forbid(unsafe_code)]

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod config;
pub mod divergence;
pub mod evalue;
pub mod measures;
pub mod projection;
pub mod ratelab;
pub mod report;
pub mod subprob;
pub mod xreal;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// A length precondition failed.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    /// An input that must be nonnegative and finite was not.
    #[error("invalid density at index {index}: {value}")]
    InvalidDensity { index: usize, value: f64 },
    /// A measure flagged as probability has mass too far from one.
    #[error("not a probability measure: mass = {mass}")]
    NotProbability { mass: f64 },
    /// Mixture weights failed validation.
    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),
    /// An index referred outside the member list or grid.
    #[error("index {index} out of bounds (len {len})")]
    IndexOutOfBounds { index: usize, len: usize },
    /// A function argument was outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A documented precondition of an operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A density is zero at a point the integrating measure charges.
    #[error("{what} vanishes at grid index {index} charged by the base measure")]
    ZeroOnSupport { what: &'static str, index: usize },
    /// A named invariant check failed during an experiment run.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// Family construction was asked for an unknown descriptor.
    #[error("unknown family: {0}")]
    UnknownFamily(String),
    /// Configuration text could not be parsed.
    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = core::result::Result<T, Error>;
