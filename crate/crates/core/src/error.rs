use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured size limit (basis index, chaos order, node count) was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A mathematical precondition of the operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Input data failed validation (normalization, model constraints).
    #[error("validation failed: {0}")]
    Validation(String),

    /// A numerical routine did not reach its target accuracy.
    #[error("accuracy target not met: {0}")]
    Accuracy(String),

    /// The requested operation is not supported for this kind of input.
    #[error("unsupported: {0}")]
    Capability(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
