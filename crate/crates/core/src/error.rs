use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LdError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("resource guard exceeded: {0}")]
    Resource(String),
    #[error("undefined quantity: {0}")]
    Undefined(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("dimension mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, LdError>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(LdError::Param(msg.into()))
}

pub(crate) fn resource<T>(msg: impl Into<String>) -> Result<T> {
    Err(LdError::Resource(msg.into()))
}
