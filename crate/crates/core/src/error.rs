use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SwiptError {
    /// An argument lies outside the domain where the expression is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative method stopped without meeting its convergence test.
    #[error("convergence error: {0}")]
    Convergence(String),
    /// Invalid parameters, channel values or campaign settings.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, SwiptError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(SwiptError::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(SwiptError::Config(msg.into()))
}
