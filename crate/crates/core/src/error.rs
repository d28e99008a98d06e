use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes do not agree.
    DimensionMismatch { expected: String, found: String },
    /// A matrix that must be positive definite failed factorization.
    NotPositiveDefinite { pivot: usize, value: f64 },
    /// Input carries no usable information (zero trace, empty kernel, ...).
    Degenerate(String),
    /// A scalar or structural parameter is outside its valid range.
    InvalidParameter(String),
    /// Input contains NaN or infinity.
    NonFinite(String),
    /// An empty collection was passed where at least one element is needed.
    Empty(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotPositiveDefinite { pivot, value } => write!(
                f,
                "matrix is not positive definite: pivot {pivot} has value {value:e}"
            ),
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NonFinite(what) => write!(f, "non-finite values in {what}"),
            Error::Empty(what) => write!(f, "{what} must not be empty"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn mismatch(expected: impl fmt::Display, found: impl fmt::Display) -> Error {
    use alloc::string::ToString;
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
