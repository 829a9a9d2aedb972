use std::fmt;

/// One of the four binary interactions of the reduced parallelogram system.
///
/// The relative vector of each pair, in terms of the reduced positions, is
/// `q1 - q2`, `q1 + q2`, `2 q1` and `2 q2` respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Pair {
    P12,
    P13,
    P14,
    P23,
}

impl Pair {
    pub const ALL: [Pair; 4] = [Pair::P12, Pair::P13, Pair::P14, Pair::P23];
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pair::P12 => "1-2",
            Pair::P13 => "1-3",
            Pair::P14 => "1-4",
            Pair::P23 => "2-3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("degenerate segment: direction vector vanishes, use the constant-integrand formula")]
    DegenerateSegment,

    #[error("collision singularity: segment passes within {distance:e} of the origin")]
    SegmentCollision { distance: f64 },

    #[error("collision singularity in pair {pair} on segment {segment}")]
    PathCollision { pair: Pair, segment: usize },

    #[error("collision singularity: configuration has coinciding bodies")]
    ConfigCollision,

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("angle undefined for a zero vector")]
    UndefinedAngle,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("boundary configuration not in {0}")]
    BoundaryMembership(&'static str),

    #[error("invalid table data: {0}")]
    TableData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
