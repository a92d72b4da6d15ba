use thiserror::Error;

use crate::params::Regime;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular point: rho = {rho} is inside the guard of a singular point")]
    Singularity { rho: f64 },

    #[error("chart error: integration from {from} to {to} would cross a singular point")]
    Chart { from: f64, to: f64 },

    #[error("regime {0:?} is not supported by this operation")]
    Regime(Regime),

    #[error("Pruefer lifting failed at rho = {rho}: {reason}")]
    Lifting { rho: f64, reason: String },

    #[error("interval [{lo}, {hi}) is outside the trace span [{span_lo}, {span_hi}]")]
    Range { lo: f64, hi: f64, span_lo: f64, span_hi: f64 },

    #[error("integration stopped early at {at}: {reason}")]
    Integration { at: f64, reason: String },

    #[error("no root in bracket: {0}")]
    NoRootInBracket(String),

    #[error("tolerance not met: {0}")]
    ToleranceNotMet(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
