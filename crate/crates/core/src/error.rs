use thiserror::Error;

use crate::Length;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid resolution {0}: need at least 3 points per circle")]
    InvalidResolution(usize),

    #[error("distance table is not square (row {row} has {len} entries, expected {expected})")]
    NotSquare { row: usize, len: usize, expected: usize },

    #[error("distance table is empty")]
    EmptyTable,

    #[error("negative distance {value} at ({i},{j})")]
    NegativeDistance { i: usize, j: usize, value: Length },

    #[error("non-zero diagonal entry at {0}")]
    NonZeroDiagonal(usize),

    #[error("asymmetric distance table at ({i},{j})")]
    Asymmetric { i: usize, j: usize },

    #[error("distinct points {i} and {j} are at distance zero")]
    CoincidentPoints { i: usize, j: usize },

    #[error("triangle inequality violated by ({i},{j},{k}): d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },

    #[error("distance scale overflow: common denominator of the table is too large")]
    ScaleOverflow,

    #[error("point index {index} out of range for a space of {len} points")]
    PointOutOfRange { index: usize, len: usize },

    #[error("point set must be non-empty")]
    EmptySet,

    #[error("operands belong to different metric spaces")]
    SpaceMismatch,

    #[error("set is not connected at the space's adjacency resolution")]
    NotConnected,

    #[error("radius must be non-negative, got {0}")]
    NegativeRadius(Length),

    #[error("{what} = {value} is not a multiple of the grid step 1/{q}")]
    NotOnGrid { what: &'static str, value: Length, q: usize },

    #[error("invalid map parameter: {0}")]
    InvalidMapParameter(String),

    #[error("image of point {0} is empty")]
    EmptyImage(usize),

    #[error("image table has {got} rows, space has {expected} points")]
    ImageTableSize { got: usize, expected: usize },

    #[error("states {from} -> {to} at step {step} are not related by the map")]
    NotAnOrbit { step: usize, from: usize, to: usize },

    #[error("orbit segments have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("orbit length must be at least 1")]
    ZeroLength,

    #[error("enumeration cap must be at least 1")]
    ZeroCap,

    #[error("tolerance {tol} is below the adjacency radius {radius}")]
    ToleranceBelowResolution { tol: Length, radius: Length },

    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(Length),

    #[error("exact mode needs an exhaustive orbit set; this one was capped")]
    NotExhaustive,

    #[error("exact search gave up after {nodes} nodes (best found {best}, proven bound {bound})")]
    SearchBudgetExhausted { nodes: u64, best: usize, bound: usize },

    #[error("need at least 2 samples to fit a growth rate, got {0}")]
    TooFewSamples(usize),

    #[error("sample counts must be at least 1")]
    ZeroCount,

    #[error("continuum family is empty")]
    EmptyFamily,

    #[error("continuum {0} in the family is degenerate (diameter 0)")]
    DegenerateContinuum(usize),

    #[error("delta must be positive, got {0}")]
    NonPositiveDelta(Length),

    #[error("split precondition violated: {0}")]
    SplitPrecondition(String),

    #[error("separated-family precondition violated: {0}")]
    FamilyPrecondition(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("separated-family node {node} did not exceed diameter {delta} within {horizon} steps")]
    HorizonExceeded { node: String, delta: Length, horizon: usize },

    #[error("invalid specification instance: {0}")]
    InvalidInstance(String),

    #[error("time {time} exceeds the horizon {horizon}")]
    BeyondHorizon { time: usize, horizon: usize },

    #[error("config error: {0}")]
    Config(String),
}
