use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("structural requirement not met: {0}")]
    StructureMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("brute-force oracle limit exceeded: {goods} goods > limit {limit}")]
    OracleLimit { goods: usize, limit: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::StructureMismatch(_) => 2,
            Error::InvariantViolation(_) => 4,
            _ => 1,
        }
    }
}
