use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

/// Exit 2 for anything wrong with the inputs, 1 for everything else.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn from_input(e: traj_uncert::Error) -> Self {
        CliError::Input(e.to_string())
    }

    pub fn from_internal(e: traj_uncert::Error) -> Self {
        CliError::Internal(e.to_string())
    }

    /// Prefixes the message with the pipeline stage that produced it.
    pub fn stage(self, name: &str) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{name}: {m}")),
            CliError::Internal(m) => CliError::Internal(format!("{name}: {m}")),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}
