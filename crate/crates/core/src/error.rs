use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("integration blew up with dt = {dt} h")]
    IntegrationBlowUp { dt: f64 },

    #[error("no unique equilibrium: state matrix is singular")]
    NoUniqueEquilibrium,

    #[error("estimator warming up ({filled}/{capacity} samples)")]
    WarmingUp { filled: usize, capacity: usize },

    #[error("simulation diverged at step {step} (t = {t} h)")]
    Divergence { step: usize, t: f64 },

    #[error("input signal length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: key `{key}`: {msg}")]
    Config {
        line: usize,
        key: String,
        msg: String,
    },

    #[error("empty load trace")]
    EmptyTrace,

    #[error("unknown scenario `{name}` (available: {available})")]
    UnknownScenario { name: String, available: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
