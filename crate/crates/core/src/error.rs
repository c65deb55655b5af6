use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The request is well formed but exceeds a configured size limit.
    #[error("capacity exceeded: {what} is {got}, limit is {limit}")]
    CapacityExceeded {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    /// An internal invariant was breached. Always a bug.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
