use thiserror::Error;

/// Errors raised by the algebraic and numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("basis Gram matrix is singular")]
    SingularBasis,

    #[error("metric is singular or not positive definite")]
    SingularMetric,

    #[error("universal forms live on different finite sets ({left} vs {right} points)")]
    BaseMismatch { left: usize, right: usize },

    #[error("forms are built on different matrix bases")]
    BasisMismatch,

    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("form degree {0} is not supported here")]
    DegreeUnsupported(usize),

    #[error("dense storage of {0} entries exceeds the size guard")]
    FormTooLarge(usize),

    #[error("operator is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("matrix is not a projector (residual {residual:e})")]
    NotProjector { residual: f64 },

    #[error("spectral triple lacks {0}")]
    MissingStructure(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
