use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),
    #[error("degenerate direction: vector norm {0:e} is below 1e-9")]
    DegenerateDirection(f64),
    #[error("degenerate axis: eigenvalue gap {0:e} must be positive")]
    DegenerateAxis(f64),
    #[error("sampling failed: {0}")]
    SamplingFailure(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} contains non-finite values")))
    }
}
