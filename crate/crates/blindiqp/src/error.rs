use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular over GF(2)")]
    Singular,

    #[error("{what} is {value}, limit is {limit}")]
    Guard {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn guard(what: &'static str, value: usize, limit: usize) -> Result<()> {
    if value > limit {
        Err(Error::Guard { what, value, limit })
    } else {
        Ok(())
    }
}
