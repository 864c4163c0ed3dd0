use alloc::string::String;

/// Errors raised by the inference and simulation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input value violates a declared data contract (outcome range,
    /// propensity bounds, ordering of time indices).
    #[error("data validation: {0}")]
    DataValidation(String),
    /// A configuration value is out of its admissible domain.
    #[error("config: {0}")]
    Config(String),
    /// A caller broke a precondition of the API (duplicate fold assignment,
    /// propensity outside `(0, 1)`).
    #[error("contract violation: {0}")]
    Contract(String),
    /// Not enough observations to form the requested interval yet.
    #[error("inference not ready: need at least {needed} observations, have {have}")]
    NotReady { needed: usize, have: usize },
    /// A numeric argument lies outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = core::result::Result<T, Error>;
