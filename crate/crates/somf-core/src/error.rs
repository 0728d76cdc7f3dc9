use core::fmt;

/// Errors raised by the factorization primitives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// An argument fell outside its admissible range.
    Domain(&'static str),
    /// Matrix/vector shapes do not line up.
    DimMismatch { expected: usize, got: usize },
    /// A coordinate of the code regression has zero curvature but a
    /// nonzero pull, so its update is unbounded.
    SingularCoordinate { index: usize },
    /// Input data contains NaN or infinite entries.
    NonFiniteInput,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::DimMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::SingularCoordinate { index } => {
                write!(f, "singular coordinate {index}: zero curvature with nonzero gradient")
            }
            Error::NonFiniteInput => write!(f, "input contains non-finite values"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
