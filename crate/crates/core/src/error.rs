use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("insufficient data: need at least {needed} trials, got {got}")]
    InsufficientData { needed: u64, got: u64 },

    #[error("empty run: at least one trial is required")]
    EmptyRun,

    #[error(
        "calibration did not converge after {iterations} iterations \
         (best rho = {best_rho}, residual = {residual:e})"
    )]
    CalibrationFailed {
        best_rho: f64,
        residual: f64,
        iterations: usize,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
