use thiserror::Error;

/// Failures raised by the trajectory laws and their supporting geometry.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("metric is singular or not positive definite (condition number {condition:e})")]
    SingularMetric { condition: f64 },
    #[error("spectrum is degenerate: eigenvalue gap {gap:e} below tolerance {tolerance:e}")]
    DegenerateSpectrum { gap: f64, tolerance: f64 },
    #[error("frame alignment is ambiguous: best overlap {overlap} < 0.5")]
    AmbiguousMatch { overlap: f64 },
    #[error("point lies on a node of psi (|psi| = {value:e})")]
    NodeOfPsi { value: f64 },
    #[error("psi must be strictly positive for the logarithmic law (psi = {value:e})")]
    NonPositivePsi { value: f64 },
    #[error("point lies on a node of xi (|xi|^2 = {value:e})")]
    XiNode { value: f64 },
    #[error("density too small for a mean-flow velocity (rho = {value:e})")]
    NodeOfRho { value: f64 },
    #[error("velocity is not real for modes {modes:?}")]
    Inadmissible { modes: Vec<usize>, radicands: Vec<f64> },
    #[error("finite-difference stencil leaves the admissible domain")]
    BoundaryTooClose,
    #[error("oscillator level {0} is not supported (max 10)")]
    UnsupportedLevel(u32),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot parse state id `{id}`: {reason}")]
    StateId { id: String, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
