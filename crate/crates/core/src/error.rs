use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite matrix entries")]
    NonFinite,
    #[error("axis is not a unit vector (norm {0})")]
    NonUnitAxis(f64),
    #[error("invalid axis `{0}`")]
    InvalidAxis(String),
    #[error("unknown operation label `{0}`")]
    UnknownLabel(String),
    #[error("invalid ordering sequence: {0}")]
    InvalidOrdering(String),
    #[error("times must be nondecreasing (index {0})")]
    DecreasingTimes(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bath_spins must be 3 for the closed forms (got {0})")]
    UnsupportedBath(usize),
    #[error("power series did not converge after {0} terms")]
    SeriesNonConvergence(usize),
    #[error("combinatorial budget exceeded: {0}")]
    Budget(String),
    #[error("infeasible target: row depends on rows {0:?}")]
    Infeasible(Vec<usize>),
    #[error("empty grid")]
    EmptyGrid,
    #[error("non-uniform grid")]
    NonUniformGrid,
    #[error("grid point {index}: {source}")]
    AtGridPoint { index: usize, source: Box<Error> },
    #[error("zero reference norm")]
    ZeroNorm,
    #[error("channel text line {line}: {msg}")]
    ChannelParse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
