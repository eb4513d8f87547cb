use std::io;

/// Errors raised by the pipeline stages.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// The input is not in the expected format (bad magic, unsupported version).
    #[error("format error: {0}")]
    Format(String),

    /// A structurally valid stream holds inconsistent or truncated data.
    #[error("corrupt stream at byte offset {offset}: {message}")]
    Corruption { offset: u64, message: String },

    /// Embedding records are not grouped contiguously by word position.
    #[error("stream order violated: {0}")]
    StreamOrder(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Input data violates a cross-record constraint (duplicates, collisions).
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("degenerate vector: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Coarse error classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Format,
    Integrity,
    NotFound,
    Usage,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io(e) if e.kind() == io::ErrorKind::NotFound => ErrorKind::NotFound,
            Error::Io(_) => ErrorKind::Io,
            Error::Format(_)
            | Error::Corruption { .. }
            | Error::StreamOrder(_)
            | Error::DimMismatch { .. }
            | Error::Parse { .. } => ErrorKind::Format,
            Error::Integrity(_) | Error::Degenerate(_) => ErrorKind::Integrity,
            Error::NotFound(_) => ErrorKind::NotFound,
            Error::InvalidArgument(_) => ErrorKind::Usage,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
