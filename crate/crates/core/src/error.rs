use thiserror::Error;

/// Errors raised by the solvers and experiment drivers.
///
/// The variants are grouped by how a caller should react: bad input,
/// a problem too large for the requested path, or a numerical failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource guard: {what} = {value} exceeds the limit {limit}")]
    ResourceGuard {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

/// Fail with [`Error::ResourceGuard`] when `value > limit`.
pub(crate) fn guard(what: &'static str, value: usize, limit: usize) -> Result<()> {
    if value > limit {
        Err(Error::ResourceGuard { what, value, limit })
    } else {
        Ok(())
    }
}
