use thiserror::Error;

pub type Result<T> = std::result::Result<T, SpcaError>;

#[derive(Debug, Error)]
pub enum SpcaError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed input file. `line` is 1-based.
    #[error("{message} at line {line}")]
    Parse { line: usize, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible point: {0}")]
    Infeasible(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
}

impl SpcaError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        SpcaError::Parse {
            line,
            message: message.into(),
        }
    }
}
