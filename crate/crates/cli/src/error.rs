use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(clap::Error),
    #[error("invalid parameter: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] synchrolab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    /// 0 ok, 2 invalid parameters, 3 capacity exceeded, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) if !e.use_stderr() => 0,
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Core(synchrolab::Error::InvalidParameter(_)) => 2,
            CliError::Core(synchrolab::Error::CapacityExceeded { .. }) => 3,
            CliError::Core(synchrolab::Error::Internal(_)) => 1,
            CliError::Io(_) | CliError::Output(_) => 1,
        }
    }
}
