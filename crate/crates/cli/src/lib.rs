//! Command-line front end: argument parsing, file formats and the
//! subcommands of the `transwave` binary.

pub mod cli;
pub mod commands;
pub mod error;
pub mod files;

pub use cli::Cli;
pub use commands::run;
pub use error::{exit, CliError};
