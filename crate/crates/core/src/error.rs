use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DqlsError {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
    #[error("invalid state name: {0}")]
    InvalidName(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("construction failed: {0}")]
    ConstructionError(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("local operator is singular: {0}")]
    SingularSlocc(String),
    #[error("SLOCC reduction impossible: {0}")]
    SloccDegenerate(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("stability certificate failed: {0}")]
    CertificateFailed(String),
    #[error("target is not stabilizable by quasi-local dynamics: {0}")]
    NotDqlsTarget(String),
    #[error("integration unstable: {0}")]
    IntegrationUnstable(String),
    #[error("neighborhoods do not cover every subsystem: {0}")]
    IncompleteNeighborhoods(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, DqlsError>;

impl From<std::io::Error> for DqlsError {
    fn from(e: std::io::Error) -> Self {
        DqlsError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for DqlsError {
    fn from(e: serde_json::Error) -> Self {
        DqlsError::Format(e.to_string())
    }
}
