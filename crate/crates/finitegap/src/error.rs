use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("theta series truncation failed: {0}")]
    TruncationFailure(String),
    #[error("argument {0} sits on a lattice point")]
    PoleAtLatticePoint(String),
    #[error("logarithm branch jump detected near {0}")]
    BranchJump(String),
    #[error("step limit exceeded at x = {0}")]
    StepLimitExceeded(f64),
    #[error("non-finite state at x = {0}")]
    NonFiniteState(f64),
    #[error("quadrature subdivision limit reached")]
    SubdivisionLimit,
    #[error("non-finite integrand at t = {0}")]
    NonFiniteIntegrand(f64),
    #[error("root finder did not converge: {0}")]
    NoConvergence(String),
    #[error("cover relations disagree: {0}")]
    InconsistentCover(String),
    #[error("potential has a pole at {0}")]
    PoleHit(String),
    #[error("operation not supported for variant {0}")]
    UnsupportedVariant(String),
    #[error("expected {expected} values, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("R vanishes on the quadrature path near {0}")]
    ZeroOfROnPath(String),
    #[error("R vanishes at {0}")]
    ZeroOfR(String),
    #[error("theta denominator vanishes at {0}")]
    ThetaZeroDenominator(String),
    #[error("theta vanishes at {0}")]
    ThetaZero(String),
    #[error("F_x vanishes at {0}")]
    CriticalPointOfF(String),
    #[error("degenerate divisor parameter u = {0}")]
    DegenerateU(String),
    #[error("inversion failed: {0}")]
    InversionFailed(String),
    #[error("fitted constants were not provided")]
    FitNotProvided,
    #[error("Dubrovin variables collided at x = {0}")]
    CollisionUnresolved(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
