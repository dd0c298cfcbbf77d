use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad input shape, index or value.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An operation was called outside its domain.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The outcome space would exceed the configured cap.
    #[error("outcome count {requested} exceeds limit {limit}")]
    SizeLimit { requested: u128, limit: u64 },

    /// Pivot caps, type-class caps, search budgets.
    #[error("resource limit reached: {0}")]
    Resource(String),

    #[error("cannot parse rational {input:?}: {reason}")]
    ParseRational { input: String, reason: String },

    /// A solver produced an answer that failed its own exact re-check.
    #[error("internal verification failed: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// True for operational limits (as opposed to bad input).
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::SizeLimit { .. } | Error::Resource(_))
    }
}
