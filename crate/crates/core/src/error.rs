use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("query time {t} is beyond the represented horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },

    #[error("Re(s) = {re} must be positive to stay on the principal branch")]
    BranchViolation { re: f64 },

    #[error("quadrature did not converge: {0}")]
    Nonconvergence(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("inversion diagnostics failed: {0}")]
    InversionDiagnostics(String),

    #[error("residual {residual:e} exceeds tolerance {tolerance:e} at {location}")]
    ResidualExceeded {
        residual: f64,
        tolerance: f64,
        location: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
