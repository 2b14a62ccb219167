use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected_width}x{expected_height}, got {width}x{height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },

    #[error("frame count mismatch: expected {expected}, got {actual}")]
    FrameCountMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("node index {index} out of range for graph with {len} nodes")]
    InvalidNode { index: usize, len: usize },

    #[error("histogram shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: (usize, usize), right: (usize, usize) },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid value {value} at index {index}: {what}")]
    OutOfRange { what: &'static str, index: usize, value: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}{}: {message}", frame.map(|f| format!(" (frame {f})")).unwrap_or_default())]
    Format {
        path: PathBuf,
        frame: Option<usize>,
        message: String,
    },

    #[error("{path} (frame {frame}): {message}")]
    Inconsistent {
        path: PathBuf,
        frame: usize,
        message: String,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, frame: Option<usize>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            frame,
            message: message.into(),
        }
    }

    pub(crate) fn param(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }

    /// True for failures caused by reading or writing files rather than by
    /// invalid parameters or inconsistent data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Format { .. } | Error::Json { .. })
    }
}
