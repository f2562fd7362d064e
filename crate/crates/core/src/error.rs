use thiserror::Error;

use crate::fast_marching::Node;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid transformation parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("degenerate metric at lattice node {0:?}: every move would be free")]
    DegenerateMetric(Node),

    #[error("corrupt distance map: {0}")]
    CorruptMap(String),

    #[error("class {0} has no training examples")]
    EmptyClass(usize),

    #[error("classifier oracle failure: {0}")]
    OracleFailure(String),

    #[error("image has zero L2 norm")]
    ZeroImage,

    #[error("malformed {kind} data: {message}")]
    Format { kind: &'static str, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(kind: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            kind,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
