use thiserror::Error;

/// Errors raised by the analytical models, the optimizer and the simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set violates a type invariant (e.g. a sensing window shorter than one sample).
    #[error("configuration error: {0}")]
    Config(String),

    /// A requested target cannot be met by any admissible parameter.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The SU never attempts a transmission (W = 0), so a conditional collision probability does
    /// not exist.
    #[error("collision probability undefined: transmission attempt probability is zero")]
    UndefinedConditional,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}
