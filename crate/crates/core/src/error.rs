use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid phase-space dimension {0}: must be even and at least 4")]
    InvalidDimension(usize),

    #[error("matrix is not symplectic: |M^T J M - J|_max = {defect:e}")]
    NotSymplectic { defect: f64 },

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("zero direction")]
    ZeroDirection,

    #[error("point is off the boundary: |H - 1| = {deviation:e}")]
    OffBoundary { deviation: f64 },

    #[error("point is not outside the body with enough clearance: H(x) - 1 = {gap:e}")]
    InsufficientClearance { gap: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("body is not centered at the origin")]
    NotCentered,

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("conic fit is not an ellipse")]
    NotElliptic,

    #[error("orbit is not closed")]
    OpenOrbit,

    #[error("no closed characteristic detected within horizon")]
    NoClosedCharacteristic,

    #[error("plane misses the interior of the body (min H on plane = {min_h})")]
    PlaneMissesInterior { min_h: f64 },

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
