use thiserror::Error;

use crate::geometry::COORD_BOUND;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate ({x}, {y}) exceeds the bound |x|,|y| <= {COORD_BOUND}")]
    CoordinateOutOfRange { x: i64, y: i64 },

    #[error("halfplane boundary through two coincident points")]
    DegeneratePair,

    #[error("halfplane with zero normal vector")]
    ZeroNormal,

    #[error("points {i} and {j} share an x-coordinate; their dual lines are parallel")]
    ParallelDuals { i: usize, j: usize },

    #[error("points {i} and {j} coincide")]
    DuplicatePoints { i: usize, j: usize },

    #[error("general position violated: {0}")]
    GeneralPosition(String),

    #[error("error budget {i} outside 0..={n}")]
    InvalidErrorBudget { i: usize, n: usize },

    #[error("sample count must be at least 1")]
    InvalidSamples,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported chain snapshot version {0}")]
    SnapshotVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
