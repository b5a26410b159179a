use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounding box ({x}, {y}, {w}, {h}): extents must be positive and finite")]
    InvalidBox { x: f64, y: f64, w: f64, h: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("target leaves the frame of view {view} at frame {frame}")]
    OutOfFrame { frame: usize, view: usize },

    #[error("sample set holds no sample with positive weight")]
    EmptySampleSet,

    #[error("optimization diverged: {0}")]
    Diverged(String),

    #[error("insufficient history: need {needed} frames, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("no reliable view available for fusion")]
    NoReliableView,

    #[error("scene rejected: {0}")]
    SceneRejected(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("I/O error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
