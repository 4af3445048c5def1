use std::fmt;

use zipflab_core::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or invalid input (exit 2).
    Input(Vec<String>),
    /// Failure while running a valid configuration (exit 3).
    Runtime(String),
    /// The model has no stationary regime (exit 4).
    NoStationary(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(vec![msg.into()])
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::NoStationary(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(lines) => write!(f, "{}", lines.join("\n")),
            CliError::Runtime(msg) | CliError::NoStationary(msg) => f.write_str(msg),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(v) => CliError::Input(v.iter().map(ToString::to_string).collect()),
            Error::InvalidArgument(_) | Error::DegenerateSample(_) | Error::Unsupported(_) => {
                CliError::input(e.to_string())
            }
            Error::NoStationaryRegime(_) | Error::NoStationaryTail(_) | Error::NotIntegrable(_) => {
                CliError::NoStationary(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
