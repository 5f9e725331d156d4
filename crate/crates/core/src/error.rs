use thiserror::Error;

/// Errors raised by the laboratory. The CLI maps `Tolerance`, `BlowUp` and
/// `Divergence` to exit code 1 and every other variant to exit code 2.
#[derive(Debug, Error)]
pub enum KpError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("blow-up at t = {time}: {cause}")]
    BlowUp { time: f64, cause: String },
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("tolerance failure: {0}")]
    Tolerance(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, KpError>;
