use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("unsupported Bessel order {0} (only 0 and 1 are available)")]
    UnsupportedOrder(u32),

    #[error("argument {0} outside the supported range |x| <= 30")]
    OutOfRange(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("step size too large: {0}")]
    StepSize(String),

    #[error("invalid probability model: {0}")]
    InvalidModel(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("undefined conditional probability: P(first qubit in |0>) = {0:e}")]
    UndefinedConditional(f64),

    #[error("indeterminate error order: delay error {0:e} below resolution")]
    IndeterminateOrder(f64),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of a numerical contract (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ContractViolation(_)
                | Error::StepSize(_)
                | Error::InvalidModel(_)
                | Error::InvalidState(_)
                | Error::UndefinedConditional(_)
                | Error::IndeterminateOrder(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
