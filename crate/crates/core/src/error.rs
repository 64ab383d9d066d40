use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("unsupported form degree {degree} for {op}")]
    UnsupportedDegree { degree: usize, op: &'static str },
    #[error("ghost layer not filled")]
    GhostsUnfilled,
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("fields use different algebras")]
    AlgebraMismatch,
    #[error("group element at node {node} is off the group by {deviation:e}")]
    NotInGroup { node: usize, deviation: f64 },
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error("initial field violates the boundary constraint by {0:e}")]
    BoundaryViolation(f64),
    #[error("time step underflow at step {step} (t = {t})")]
    StepUnderflow { step: usize, t: f64 },
    #[error("non-finite value at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("mode count too small: tail {tail:e} at t = {t:e}")]
    InsufficientModes { t: f64, tail: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("not enough snapshots: {0}")]
    MissingSnapshots(String),
    #[error("snapshots are not uniformly spaced")]
    NonUniformSnapshots,
    #[error("missing monitor series")]
    MissingMonitors,
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("path leaves the interior band at s = {s}")]
    OutsideBand { s: f64 },
    #[error("paths are not composable: gap {0:e}")]
    NotComposable(f64),
    #[error("loop is not closed: gap {0:e}")]
    NotClosed(f64),
    #[error("finite-difference noise floor exceeded: {0}")]
    NoiseFloor(String),
    #[error("point lies on the washer")]
    OnWasher,
    #[error("loop offset must be positive; the flux diverges at zero offset")]
    DivergentFlux,
    #[error("refinement sequence is not Cauchy: relative gap {0:e}")]
    NotCauchy(f64),
    #[error("parameters outside the admissible range: {0}")]
    OutOfRange(String),
    #[error("grid node within the washer exclusion band and no cap policy set")]
    WasherIntersectsBox,
    #[error("subinterval {index} fails with margin {margin:e}")]
    SubintervalFails { index: usize, margin: f64 },
}
