use thiserror::Error;

/// Errors raised by the particle library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A quadrature produced a non-finite sample or total.
    #[error("integration error: {0}")]
    Integration(String),
    /// A series or iterative scheme failed to converge, or a value overflowed.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A regression could not be formed from the supplied points.
    #[error("fit error: {0}")]
    Fit(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
