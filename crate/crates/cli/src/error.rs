use std::path::PathBuf;

use thiserror::Error;
use universal_pade::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {what}: {detail}")]
    Parse { what: String, detail: String },
    #[error("missing required field `{0}` (pass it as a flag or in the config)")]
    Missing(&'static str),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn parse(what: impl Into<String>, detail: impl ToString) -> Self {
        CliError::Parse {
            what: what.into(),
            detail: detail.to_string(),
        }
    }

    /// Process exit status; 0 is never returned.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Parse { .. } | CliError::Missing(_) | CliError::Unsupported(_) => 2,
            CliError::Verification(_) => 6,
            CliError::Core(e) => match e {
                CoreError::NonFinite(_) | CoreError::InvalidInput(_) | CoreError::EmptyShape => 2,
                CoreError::NotInDpq { .. }
                | CoreError::OrderViolation(_)
                | CoreError::HypothesisViolation(_)
                | CoreError::ScheduleIncompatible(_)
                | CoreError::PoleAtPoint { .. }
                | CoreError::PoleOnSet { .. }
                | CoreError::OrderTooLarge { .. } => 3,
                CoreError::TruncationExceeded { .. } => 4,
                CoreError::SearchExhausted { .. }
                | CoreError::NoSafeD
                | CoreError::DegenerateInterpolation { .. }
                | CoreError::DegreeCapExceeded { .. }
                | CoreError::TaskInfeasible { .. } => 5,
                CoreError::CorruptTranscript(_) => 6,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
