//! Joint detection and tracking of multiple maneuvering targets in clutter.
//!
//! The tracker runs a sliding batch window over range–azimuth scans and
//! alternates four coupled estimators until the window's beliefs stop moving:
//! measurement-to-track association (loopy belief propagation under one-to-one
//! frame constraints), per-track visibility (a two-state hidden Markov chain),
//! motion-model selection (a hidden Markov chain over maneuver models), and
//! kinematic state (per-model unscented filtering with backward smoothing,
//! fused across models). Supporting modules provide the scenario simulator,
//! assignment solvers, and the evaluation metric suite.

pub mod assignment;
pub mod assoc;
pub mod belief;
pub mod filters;
pub mod hmm;
pub mod metrics;
pub mod models;
pub mod sim;
pub mod tracker;

/// Errors surfaced by model construction and the estimation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("sample time must be positive, got {0}")]
    NonPositiveSampleTime(f64),
    #[error("turn rate must be nonzero; use the constant-velocity model for omega = 0")]
    ZeroTurnRate,
    #[error("measurement model undefined at zero range")]
    ZeroRange,
    #[error("covariance is not positive definite (Cholesky factorization failed)")]
    NotPositiveDefinite,
    #[error("model weights sum to zero; nothing to fuse")]
    DegenerateModelWeights,
    #[error("synthetic measurement requested with no association mass on measurements")]
    NoAssociationMass,
    #[error("association event enumeration limited to {limit} targets/measurements, got {got}")]
    EnumerationTooLarge { limit: usize, got: usize },
    #[error("evidence assigns zero probability to every chain state")]
    ZeroLikelihood,
    #[error("{0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;
