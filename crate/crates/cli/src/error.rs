use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("simulation error: {0}")]
    Simulation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 when the cell failure budget is exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Simulation(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<macrosync_core::Error> for CliError {
    fn from(e: macrosync_core::Error) -> Self {
        CliError::Simulation(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
