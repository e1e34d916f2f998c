use ldgap_core::LdError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] LdError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv line {line}: {msg}")]
    Csv { line: u64, msg: String },
    #[error("plot: {0}")]
    Plot(String),
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

pub(crate) fn config_err<T>(line: usize, msg: impl Into<String>) -> HarnessResult<T> {
    Err(HarnessError::Config { line, msg: msg.into() })
}
