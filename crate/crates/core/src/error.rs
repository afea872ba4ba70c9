use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("degenerate filling: gap at the Fermi level is {gap:e}")]
    DegenerateFilling { gap: f64 },
    #[error("near-singular overlap matrix (condition estimate {condition:e})")]
    NearSingular { condition: f64 },
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("zero-probability projection (probability {0:e})")]
    ZeroProbability(f64),
    #[error("phase problem: weight {re:e}{im:+e}i is not real nonnegative")]
    PhaseProblem { re: f64, im: f64 },
    #[error("unreliable reference value {0:e}")]
    UnreliableReference(f64),
    #[error("operator is not diagonal in the computational basis")]
    NotDiagonal,
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
