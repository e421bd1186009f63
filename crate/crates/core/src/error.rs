use thiserror::Error;

use crate::geometry::Point2;

#[derive(Debug, Error)]
pub enum Error {
    #[error("world parse error at line {line}, column {column}: {msg}")]
    WorldParse {
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("pose inside obstacle at ({x:.3}, {y:.3})")]
    PoseInObstacle { x: f64, y: f64 },

    #[error("position ({x:.3}, {y:.3}) is not in free space")]
    NotFree { x: f64, y: f64 },

    #[error("path leaves free space at index {index}")]
    PathBlocked { index: usize },

    #[error("motion blocked near ({:.3}, {:.3})", .at.x, .at.y)]
    MotionBlocked { at: Point2 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient overlap: {0} valid points")]
    InsufficientOverlap(usize),

    #[error("alignment failed (best rms {0:.3} m)")]
    AlignmentFailed(f64),

    #[error("node {0} is not a main node")]
    NotMainNode(usize),

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("map is empty")]
    EmptyMap,

    #[error("unsupported map version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("malformed map: {0}")]
    MalformedMap(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
