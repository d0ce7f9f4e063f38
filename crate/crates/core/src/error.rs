//! Error type shared by the solvers.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric resolution failure in {what}: {detail}")]
    NumericResolution { what: String, detail: String },

    #[error("regularity violated: {0}")]
    Regularity(String),

    /// A market-coverage precondition fails; `inequality` is human readable,
    /// e.g. `v0 >= max 1/g = 2`.
    #[error("coverage precondition violated: {inequality} (v0 = {v0})")]
    Coverage { inequality: String, v0: f64 },

    #[error("no interior split: {0}")]
    NoInteriorSplit(String),

    #[error("unsupported assumption: {0}")]
    UnsupportedAssumption(String),

    #[error("root not bracketed: {0}")]
    BracketNotFound(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numeric(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::NumericResolution {
            what: what.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
