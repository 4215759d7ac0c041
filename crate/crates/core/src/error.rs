use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("degenerate polygon at index {index}: {points} points, need at least 3")]
    DegeneratePolygon { index: usize, points: usize },

    #[error("unsupported shape type {shape_type:?} at index {index}")]
    UnsupportedShape { index: usize, shape_type: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("missing prediction files for ids: {}", .0.join(", "))]
    MissingPredictions(Vec<String>),

    #[error("missing input {}", .0.display())]
    MissingInput(PathBuf),

    #[error("unsupported format version {found} in {what} (expected {expected})")]
    FormatVersion {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Wrap an I/O failure; a missing file becomes [`Error::MissingInput`].
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn from_json(err: &serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    /// Stable, machine-parseable class name for the error.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::Parse { .. } => "parse",
            Error::DegeneratePolygon { .. } => "degenerate-polygon",
            Error::UnsupportedShape { .. } => "unsupported-shape",
            Error::EmptyInput(_) => "empty-input",
            Error::DuplicateId(_) => "duplicate-id",
            Error::NonFinite(_) => "non-finite",
            Error::MissingPredictions(_) => "missing-predictions",
            Error::MissingInput(_) => "missing-input",
            Error::FormatVersion { .. } => "format-version",
            Error::Io { .. } => "io",
            Error::Image { .. } => "image",
        }
    }
}
