use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Interchange document violates the schema. Names the first offending
    /// field, with the frame index when the problem is inside a frame record.
    #[error("schema error at {field}: {message}")]
    Schema { field: String, message: String },

    #[error("sequence too short for dynamics: {frames} frames (need at least 3)")]
    TooShort { frames: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("degenerate geometry in part {part}: {message}")]
    DegenerateGeometry { part: usize, message: String },

    #[error("degenerate 6d rotation: {0}")]
    DegenerateRotation(String),

    #[error("kinematic tree is cyclic at joint {joint}")]
    CyclicTree { joint: usize },

    #[error("no support: {0}")]
    NoSupport(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
