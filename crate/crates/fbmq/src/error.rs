//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented domain restriction.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model shape the estimator cannot handle (e.g. non-constant
    /// volatility in the discounted problem).
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    /// An estimator precondition failed (distinct from a plain domain
    /// error so the CLI can map it to its own exit code).
    #[error("estimator precondition: {0}")]
    Precondition(String),

    /// The optimizer could not bracket a minimum inside the search
    /// interval. Carries the probe history for diagnostics.
    #[error("bracket failure: objective still decreasing at u = {u_hi} (last value {last_value})")]
    BracketFailure { u_hi: f64, last_value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
