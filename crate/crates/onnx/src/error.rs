use thiserror::Error;

#[derive(Debug, Error)]
pub enum OnnxError {
    #[error("cannot decode model: {0}")]
    Decode(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("shape error in {op}: {message}")]
    Shape { op: String, message: String },
    #[error("missing value {0:?}")]
    Missing(String),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, OnnxError>;

pub(crate) fn shape_err(op: &str, message: impl Into<String>) -> OnnxError {
    OnnxError::Shape {
        op: op.to_string(),
        message: message.into(),
    }
}

impl From<OnnxError> for weakseg_core::Error {
    fn from(e: OnnxError) -> Self {
        match e {
            OnnxError::Io { path, source } => weakseg_core::Error::Io { path, source },
            OnnxError::Decode(m) => weakseg_core::Error::Format(format!("onnx model: {m}")),
            OnnxError::Unsupported(m) => weakseg_core::Error::Config(format!("onnx model: {m}")),
            other => weakseg_core::Error::Backend(other.to_string()),
        }
    }
}
