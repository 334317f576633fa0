use std::process::ExitCode;

/// Failures of the harness, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(cnd_core::Error),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;

impl SimError {
    pub fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }

    /// 2 for bad input, 3 for numerical trouble, 1 for failed checks and IO.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            SimError::Config(_) => ExitCode::from(2),
            SimError::Numeric(_) => ExitCode::from(3),
            SimError::CheckFailed(_) | SimError::Io(_) | SimError::Csv(_) | SimError::Json(_) => {
                ExitCode::from(1)
            }
        }
    }
}

impl From<cnd_core::Error> for SimError {
    fn from(e: cnd_core::Error) -> Self {
        use cnd_core::Error as E;
        match e {
            E::InvalidParameter { .. } | E::InvalidTradeoff(_) | E::TrivialTradeoff => {
                SimError::Config(e.to_string())
            }
            _ => SimError::Numeric(e),
        }
    }
}
