use thiserror::Error;

/// Failures that stop a run, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config invalid: {0}")]
    Config(String),
    #[error("oracle cap exceeded: {0}")]
    Cap(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Cap(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    /// Maps a library error raised while running, prefixing configuration
    /// field names with `prefix`.
    pub fn from_core(err: complex_action::Error, prefix: &str) -> Self {
        use complex_action::Error as E;
        match err {
            E::Config { field, reason } => CliError::Config(format!("{prefix}{field}: {reason}")),
            E::Dimension { .. } | E::Empty(_) | E::Parse(_) => CliError::Config(format!("{prefix}{err}")),
            E::OracleTooLarge { .. } | E::OutputTooLarge { .. } => CliError::Cap(err.to_string()),
            E::NoClassicalSolution { .. } | E::Numerical(_) => CliError::Numerical(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
