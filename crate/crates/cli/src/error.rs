use std::fmt;
use std::path::Path;

use transwave_core::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const PARSE: u8 = 2;
    pub const UNDERDETERMINED: u8 = 3;
    pub const DIVERGENCE: u8 = 4;
    pub const CONFIG: u8 = 5;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(exit::PARSE, message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(exit::CONFIG, message)
    }

    /// Prefix the message with the file it concerns.
    pub fn in_file(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub fn code_for(e: &Error) -> u8 {
    match e {
        Error::Json(_) | Error::Csv(_) | Error::Parse(_) => exit::PARSE,
        Error::Underdetermined { .. } | Error::InsufficientArrivals { .. } => exit::UNDERDETERMINED,
        Error::Divergence { .. } | Error::Hybrid { .. } => exit::DIVERGENCE,
        Error::Topology(_)
        | Error::InvalidModel(_)
        | Error::InvalidDisturbance(_)
        | Error::SingularLine { .. }
        | Error::Domain(_)
        | Error::Config(_)
        | Error::IsolatedNode { .. }
        | Error::Io(_) => exit::CONFIG,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::new(code_for(&e), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::config(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
