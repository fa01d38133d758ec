use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("hermite degree {degree} exceeds the evaluation limit {limit}")]
    DegreeOverflow { degree: usize, limit: usize },

    #[error("non-finite input: {0}")]
    NonFiniteInput(&'static str),

    #[error("quadrature order {order} exceeds the limit {limit}")]
    OrderOverflow { order: usize, limit: usize },

    #[error("invalid spectral window: {0}")]
    InvalidWindow(String),

    #[error("operation requires a nonempty spectral window")]
    EmptyWindow,

    #[error("nonpositive time parameter t = {0}")]
    NonPositiveTime(f64),

    #[error("coefficient length {got} does not match window dimension {expected}")]
    LengthMismatch { got: usize, expected: usize },

    #[error("coefficient profile is identically zero")]
    AllZeroProfile,

    #[error("cannot normalize the zero vector")]
    ZeroVector,

    #[error("argument outside domain: {0}")]
    DomainError(String),

    #[error("entries must be strictly positive for the Kakutani affinity")]
    NonPositiveEntry,

    #[error("eigenfunction degrees exceed the design order of the grid")]
    GridEnvelope,

    #[error("incompatible interpolation exponents: {0}")]
    IncompatibleExponents(String),

    #[error("matrix size {size} exceeds the limit {limit}")]
    SizeOverflow { size: usize, limit: usize },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("degenerate abscissa: {0}")]
    DegenerateAbscissa(String),

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid random law: {0}")]
    InvalidLaw(String),
}
