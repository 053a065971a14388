use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left} vs {right}")]
    Shape {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("value {value} outside [{min}, {max}]")]
    Range { value: f64, min: f64, max: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: missing or invalid field \"{field}\"")]
    Field { line: usize, field: &'static str },

    #[error("bad input data: {0}")]
    Data(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("checkpoint integrity check failed: {0}")]
    Integrity(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: impl ToString, right: impl ToString) -> Self {
        Error::Shape {
            op,
            left: left.to_string(),
            right: right.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end:
    /// 2 for configuration problems, 3 for bad or missing data, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Parse { .. }
            | Error::Field { .. }
            | Error::Io { .. }
            | Error::Data(_)
            | Error::NotFound(_)
            | Error::Version { .. }
            | Error::Integrity(_) => 3,
            _ => 4,
        }
    }
}
