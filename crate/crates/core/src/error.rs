use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied parameters that violate a precondition.
    #[error("invalid parameter: {0}")]
    Param(String),
    /// An exhaustive search was requested on an instance too large to enumerate.
    #[error("instance too large for enumeration: {0}")]
    Size(String),
    /// Internal bookkeeping disagrees with itself.
    #[error("internal consistency violated: {0}")]
    Consistency(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    /// Process exit code: 2 for usage/parameter problems, 3 for internal
    /// consistency failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Consistency(_) => 3,
            _ => 2,
        }
    }
}
