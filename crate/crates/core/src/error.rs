use thiserror::Error;

/// Errors raised by the laboratory. Divergence of a functional is not an
/// error: it is reported through [`crate::functional::Estimate::diverged`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown field identifier `{0}`")]
    UnknownField(String),

    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        budget: u128,
    },

    #[error("engine `{engine}` cannot evaluate this field: {reason}")]
    UnsupportedEngine {
        engine: &'static str,
        reason: String,
    },

    #[error("field is not in W^{{1,p}} for p = {p}; only the infinite interpretation applies")]
    NotSobolev { p: f64 },

    #[error("no finite cutoff at tolerance: {0}")]
    NoFiniteCutoff(String),

    #[error("sweep diverged at ladder point {index} (parameter {param})")]
    SweepDiverged { index: usize, param: f64 },

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::InvalidParameter(msg.into()))
}
