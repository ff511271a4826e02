use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty Hamiltonian")]
    EmptyHamiltonian,

    #[error("{n} qubits exceeds the dense limit of {limit}")]
    DenseLimit { n: usize, limit: usize },

    #[error("{m} hidden units exceeds the marginalization limit of {limit}")]
    MarginalizationLimit { m: usize, limit: usize },

    #[error("coupling at domain boundary")]
    DomainBoundary,

    #[error("zero-weight trajectory")]
    ZeroWeight,

    #[error("no accepted samples")]
    NoAcceptedSamples,

    #[error("at least two batches are required, got {0}")]
    TooFewBatches(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("term is not diagonal: {0}")]
    NotDiagonal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
