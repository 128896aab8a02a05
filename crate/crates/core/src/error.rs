use thiserror::Error;

/// Errors raised by the analysis modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resource limit: {what} = {value} exceeds the limit of {limit}")]
    ResourceLimit {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("unsupported assignment: {0}")]
    UnsupportedAssignment(String),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn limit(what: &'static str, value: usize, limit: usize) -> Self {
        Error::ResourceLimit { what, value, limit }
    }

    pub(crate) fn check_schema(found: &str, expected: &str) -> Result<()> {
        if found == expected {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("schema {found:?}, expected {expected:?}")))
        }
    }

    /// True for [`Error::ResourceLimit`].
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::ResourceLimit { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
