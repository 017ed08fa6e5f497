use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThetaError {
    #[error("tau must lie in the open upper half-plane (got Im tau = {0})")]
    InvalidTau(f64),
    #[error("series tail bound {bound:e} still above tolerance after {terms} terms; reduce tau first")]
    TailNotConverged { terms: usize, bound: f64 },
    #[error("theta_1 vanishes at the requested point (|theta_1| = {0:e})")]
    PoleAtLatticePoint(f64),
    #[error("power series truncation estimate {estimate:e} exceeds the window tolerance")]
    TruncationTooCoarse { estimate: f64 },
    #[error("integer recurrence {grid} left a remainder at cell ({m},{n})")]
    IntegralityViolation { grid: String, m: usize, n: usize },
    #[error("degenerate curve: a^3 = 27 b^2")]
    DegenerateCurve,
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("argument too close to the period lattice (distance {0:e})")]
    LatticePole(f64),
    #[error("Z = zeta - x eta vanishes at the requested point")]
    ZVanishes,
    #[error("zero denominator in the multiplication recurrence at step {0}")]
    ZeroDenominator(u32),
    #[error("periods are real-proportional")]
    DegeneratePeriods,
    #[error("quadrature did not reach tolerance (estimate {0:e})")]
    QuadratureFailed(f64),
    #[error("x = {0} is too close to a branch point 0 or 1")]
    BranchPointProximity(String),
    #[error("solution has a pole at the requested point")]
    PoleHit,
    #[error("y is too close to one of 0, 1, x or infinity")]
    PoleTooClose,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, ThetaError>;
