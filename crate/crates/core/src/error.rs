use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The solution left the representable range. The trajectory up to the
    /// last finite snapshot is retained.
    #[error("blow-up detected at t = {time} (sup |u| = {sup_norm:e})")]
    BlowUp {
        time: f64,
        sup_norm: f64,
        partial: Option<Box<Trajectory>>,
    },

    #[error("Picard iteration did not converge after {iterations} iterations (last difference {last:e})")]
    NonContraction { iterations: usize, last: f64, history: Vec<f64> },

    #[error("configuration error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
