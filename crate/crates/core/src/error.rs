use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("unsupported padding: margin {margin} must be smaller than dimension {dim}")]
    UnsupportedPadding { margin: usize, dim: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("backend error: {0}")]
    Backend(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {message}")]
    Image { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse classification used for process exit codes:
    /// 2 usage, 3 data/format, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Parameter(_) => 2,
            Error::Shape(_)
            | Error::UnsupportedPadding { .. }
            | Error::Format(_)
            | Error::Config(_)
            | Error::Data(_)
            | Error::Dataset(_)
            | Error::Io { .. }
            | Error::Image { .. } => 3,
            Error::Backend(_) => 4,
        }
    }
}
