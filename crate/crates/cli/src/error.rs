use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid scenario or flags. Exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Failure while running. Exit code 3.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(3),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<dynmatch::Error> for CliError {
    fn from(e: dynmatch::Error) -> Self {
        match e {
            dynmatch::Error::InvalidConfig(_)
            | dynmatch::Error::InvalidParameter(_)
            | dynmatch::Error::Parse { .. }
            | dynmatch::Error::AsymmetricMatrix { .. }
            | dynmatch::Error::InvalidDiagonal { .. } => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
