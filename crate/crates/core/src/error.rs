use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("reducible chain: states {unreachable:?} are not reachable from {from}")]
    Reducible {
        from: String,
        unreachable: Vec<String>,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("moment explosion in {family} at w = {w}: {detail}")]
    MomentExplosion {
        family: String,
        w: f64,
        detail: String,
    },

    #[error("absorbing state {0} (zero exit rate)")]
    Absorbing(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("divergent series: spectral radius {rho} >= 2")]
    DivergentSeries { rho: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("not applicable: {0}")]
    Inapplicable(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("estimator unavailable: {0}")]
    Unavailable(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable code, used in CLI error payloads.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation { .. } => "validation",
            Error::Reducible { .. } => "reducible",
            Error::Contract(_) => "contract",
            Error::MomentExplosion { .. } => "moment-explosion",
            Error::Absorbing(_) => "absorbing",
            Error::Numerical(_) => "numerical",
            Error::DivergentSeries { .. } => "divergent-series",
            Error::Precondition(_) => "precondition",
            Error::Inapplicable(_) => "inapplicable",
            Error::Configuration(_) => "configuration",
            Error::Unavailable(_) => "unavailable",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
