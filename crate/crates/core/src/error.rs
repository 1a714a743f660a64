use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("improvement is undefined for a zero baseline")]
    UndefinedImprovement,

    #[error("{what} {value} out of range (expected {expected})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        expected: String,
    },

    #[error("enumeration bound exceeded: {0}")]
    Bounds(String),

    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("invalid policy `{0}`")]
    Policy(String),
}

impl Error {
    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format { line, msg: msg.into() }
    }
}
