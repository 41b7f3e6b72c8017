use thiserror::Error;

/// Errors raised by curve operations, the solver, the constructions and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unit-speed residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    SpeedViolation { residual: f64, tol: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty curve list")]
    EmptyList,
    #[error("bad arclength range [{a}, {b}] on a curve of length {length}")]
    BadRange { a: f64, b: f64, length: f64 },
    #[error("scale factor must be positive, got {0}")]
    NonpositiveScale(f64),
    #[error("plane normal is not a unit vector (|w| = {0})")]
    BadNormal(f64),
    #[error("axis direction is not a unit vector (|d| = {0})")]
    BadAxis(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("density returned a non-finite value at |k| = {0}")]
    DensityDomain(f64),
    #[error("curve is not closed: position gap {gap:.3e}, angle gap {angle_gap:.3e}")]
    NotClosed { gap: f64, angle_gap: f64 },
    #[error("convexity probe failed at t = {t}, lambda = {lambda} (margin {margin:.3e})")]
    ProbeFailed { t: f64, lambda: f64, margin: f64 },
    #[error("profile is not well-periodic: {predicate} violated near s = {at}")]
    NotWellPeriodic { predicate: String, at: f64 },
    #[error("profile is not m/2-fold: L/T = {ratio}")]
    NotFolded { ratio: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("bad normalization: {0}")]
    BadNormalization(String),
    #[error("chord length is zero; the pinned symmetry identity does not apply")]
    ZeroChord,
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("left the requested basin: expected {expected} interior inflections, found {found}")]
    LeftBasin { expected: usize, found: usize },
    #[error("mode not found: {0}")]
    ModeNotFound(String),
    #[error("unsupported exponent p = {0}")]
    UnsupportedExponent(f64),
    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),
    #[error("constraint projection failed: {0}")]
    ProjectionFailed(String),
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("range exceeded: {0}")]
    RangeExceeded(String),
    #[error("no energy drop found: {0}")]
    NoDropFound(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code class: 2 for hypothesis failures, 3 for inconclusive outcomes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::HypothesisViolated(_)
            | Error::BadNormalization(_)
            | Error::ZeroChord
            | Error::NotWellPeriodic { .. }
            | Error::NotFolded { .. }
            | Error::NotClosed { .. }
            | Error::ProbeFailed { .. }
            | Error::RangeExceeded(_)
            | Error::UnsupportedExponent(_) => 2,
            Error::NoDropFound(_)
            | Error::NoConvergence { .. }
            | Error::ModeNotFound(_)
            | Error::LeftBasin { .. }
            | Error::RootNotBracketed(_) => 3,
            _ => 1,
        }
    }
}
