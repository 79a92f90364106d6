use std::path::Path;

use thiserror::Error;

/// Failures grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("stage failure: {0}")]
    Stage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Stage(_) => 4,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }
}

impl From<linkbias_core::Error> for CliError {
    fn from(err: linkbias_core::Error) -> Self {
        use linkbias_core::Error as E;
        match err {
            E::Config(_) => CliError::Config(err.to_string()),
            E::Parse { .. }
            | E::EmptyInput
            | E::Io(_)
            | E::Json(_)
            | E::Coverage { .. }
            | E::NonFinite(_) => CliError::Data(err.to_string()),
            E::EmptyGraph | E::Contract(_) | E::Dimension { .. } | E::Insufficient(_) => {
                CliError::Stage(err.to_string())
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
