//! Library side of the `zipflab` command-line tool.

pub mod commands;
pub mod error;
pub mod scenario;

pub use error::{CliError, CliResult};
