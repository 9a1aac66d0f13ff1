use thiserror::Error;

/// Errors raised by constructors and operations across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be positive, got {0}")]
    ZeroDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("window extents must be positive")]
    EmptyWindow,

    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),

    #[error("rotation number {num}/{den} is degenerate: {reason}")]
    DegenerateRotation { num: i64, den: i64, reason: &'static str },

    #[error("inconsistent period structure: {0}")]
    InconsistentPeriods(String),

    #[error("product of an empty list of systems")]
    EmptyProduct,

    #[error("set belongs to system `{found}`, expected `{expected}`")]
    SystemMismatch { expected: String, found: String },

    #[error("point is not a point of system `{0}`")]
    ForeignPoint(String),

    #[error("mesh must be positive and finite, got {0}")]
    BadMesh(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("evaluation region of {0} cells exceeds the table budget")]
    RegionTooLarge(u128),

    #[error("factor maps are not composable: {0}")]
    NotComposable(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
