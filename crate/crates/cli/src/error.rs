use std::path::PathBuf;

use echo_core::EchoError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("refusing run: estimated {estimate:.3e} {what} exceeds the limit {limit:.0e}; pass --force to run anyway")]
    Resource {
        what: &'static str,
        estimate: f64,
        limit: f64,
    },

    #[error(transparent)]
    Core(#[from] EchoError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("evaluators disagree: max |f_stepping - f_spectral| = {deviation:e}")]
    OracleMismatch { deviation: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// 2 for configuration problems, 3 for resource refusals, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config { .. } => 2,
            LabError::Core(EchoError::InvalidParameter { .. }) => 2,
            LabError::Core(EchoError::OracleSizeExceeded { .. }) => 3,
            LabError::Resource { .. } => 3,
            _ => 1,
        }
    }
}

pub(crate) fn config_err(field: &str, reason: impl Into<String>) -> LabError {
    LabError::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> LabError {
    let path = path.into();
    move |source| LabError::Io { path, source }
}
