use thiserror::Error;

/// Errors reported by kr-core operations.
///
/// Preconditions are checked eagerly; every violation carries enough context
/// to point at the offending index or pair.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("space must contain at least one point")]
    EmptySpace,

    #[error("point {point} has dimension {got}, space has dimension {expected}")]
    DimensionMismatch {
        point: usize,
        expected: usize,
        got: usize,
    },

    #[error("distance matrix is malformed: {0}")]
    BadMatrix(String),

    #[error("coordinate of point {point} is not finite")]
    NonFiniteCoordinate { point: usize },

    #[error("point index {index} out of range for space of {len} points")]
    PointOutOfRange { index: usize, len: usize },

    #[error("measures live on unrelated spaces")]
    SpaceMismatch,

    #[error("matrix-mode spaces cannot register new points")]
    MatrixSpaceFrozen,

    #[error("function is undefined at point {index}")]
    UndefinedAt { index: usize },

    #[error("values at points {i} and {j} violate the Lipschitz bound: |df| = {observed}, allowed {allowed}")]
    NotLipschitz {
        i: usize,
        j: usize,
        observed: f64,
        allowed: f64,
    },

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("negative weight {weight} at point {index}")]
    NegativeWeight { index: usize, weight: f64 },

    #[error("measure has mass {mass}, expected a probability measure")]
    NotProbability { mass: f64 },

    #[error("transport instance too large: union support has {atoms} atoms, limit {limit}")]
    TooManyAtoms { atoms: usize, limit: usize },

    #[error("transport solver exceeded the pivot safety limit ({pivots} pivots)")]
    PivotLimitExceeded { pivots: usize },

    #[error("map is not a contraction: lip = {lip}")]
    NotContractive { lip: f64 },

    #[error("invalid contraction system: {0}")]
    BadSystem(String),

    #[error("affine fixed-point solve failed: matrix I - A is numerically singular")]
    SingularSystem,

    #[error("sequence growth condition violated at index {index}: {detail}")]
    GrowthViolated { index: usize, detail: String },

    #[error("escape premise failed: no term past {searched_from} up to horizon {horizon} leaves the {} covering points {covering:?}", covering.len())]
    PremiseFailed {
        searched_from: usize,
        horizon: usize,
        covering: Vec<usize>,
    },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
