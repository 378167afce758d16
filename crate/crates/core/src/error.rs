use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid substitution system: {0}")]
    InvalidSystem(String),

    #[error("collar exceeds patch: position {index} with collar {k} in a word of length {len}")]
    CollarExceedsPatch { index: usize, k: usize, len: usize },

    #[error("theta must be irrational")]
    RationalTheta,

    #[error("singular coding point: {0}")]
    SingularCodingPoint(String),

    #[error("invalid quadratic irrational: {0}")]
    InvalidQuadratic(String),

    #[error("expansion did not stabilise within {rounds} rounds (word length {len})")]
    NoStabilization { rounds: usize, len: usize },

    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("complex file line {line}: {message}")]
    ComplexParse { line: usize, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a chain map: {0}")]
    ChainMapFailure(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("undecidable at this radius: {0}")]
    UndecidableAtRadius(String),

    #[error("no valid transversal sample: {0}")]
    NoSamples(String),

    #[error("cell not realized: {0}")]
    CellNotRealized(String),

    #[error("marginal eigenvalue: mixed group undetermined at this tolerance (|lambda| = {modulus})")]
    MarginalEigenvalue { modulus: f64 },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
