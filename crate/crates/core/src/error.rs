use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A constructor argument is out of range. `field` names the offending
    /// input, `message` is the human-readable constraint.
    #[error("{message}")]
    InvalidParameter { field: &'static str, message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined moment: {0}")]
    UndefinedMoment(String),

    #[error("closure misuse: {0}")]
    ClosureMisuse(String),

    #[error("time step too large: rate * dt = {rate_dt:.4} exceeds the limit {limit}")]
    StepSize { rate_dt: f64, limit: f64 },

    #[error("hard-sphere majorant violated: relative speed {speed} exceeds majorant {majorant}")]
    MajorantViolation { speed: f64, majorant: f64 },

    #[error("positivity failure in cell {cell}: {reason}")]
    Positivity { cell: usize, reason: String },

    #[error("temperature went negative ({temperature:e}) at t = {t}; retry with a smaller dt")]
    NegativeTemperature { t: f64, temperature: f64 },

    #[error("no finite equilibrium: effective coefficient {0} >= 1")]
    NoEquilibrium(f64),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            message: message.into(),
        }
    }
}
