use std::path::PathBuf;

/// Errors raised by the optimizer library and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("analytic Hessian diagonal unavailable for objective `{0}`")]
    HessianUnavailable(String),

    #[error("aggregate membership of universe `{0}` has zero mass")]
    ZeroMass(String),

    #[error("unknown {kind} `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
