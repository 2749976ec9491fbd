use std::fmt;
use std::path::Path;

/// Failure of a subcommand, split by the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, arguments or input files. Exit code 2.
    Input(String),
    /// The computation itself failed, e.g. a diverged run. Exit code 3.
    Numeric(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Numeric(msg) => f.write_str(msg),
        }
    }
}

impl From<steerlab::Error> for CliError {
    fn from(e: steerlab::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}
