use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(#[from] holochaos::Error),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Precondition(_) => ExitCode::from(3),
            CliError::Output { .. } => ExitCode::from(1),
        }
    }

    pub fn missing(command: &str, name: &str) -> Self {
        CliError::Config(format!(
            "missing parameter `{name}`: pass --{name} or set `{name}` under [{command}] in the config file"
        ))
    }
}

/// Exit status for a run whose `--check` assertions failed.
pub const CHECK_FAILED: u8 = 4;
