use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error(
        "kernel support radius {radius} overlaps its periodic image on a torus of edge {edge}"
    )]
    PeriodizationOverlap { radius: f64, edge: f64 },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("negative density {value} at grid index {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("instability at step {step} (t = {time}): {reason}")]
    Instability {
        step: usize,
        time: f64,
        reason: String,
    },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("absorbing state: total event rate is zero")]
    Absorbing,

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("certificate violated: {0}")]
    CertificateViolated(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
