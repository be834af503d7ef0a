use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid exponent {value}: {reason}")]
    InvalidExponent { value: f64, reason: &'static str },

    #[error("nonpositive weight value {value} at cell {cell}")]
    NonPositiveWeight { cell: usize, value: f64 },

    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("denominator tuple has zero norm")]
    ZeroDenominator,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("divergent series: {0}")]
    Divergent(String),

    #[error("invalid structure tag: {0}")]
    InvalidStructure(String),

    #[error("csv row {row}: {msg}")]
    Csv { row: usize, msg: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
