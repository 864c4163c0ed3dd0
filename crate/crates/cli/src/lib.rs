//! File formats, configuration and commands behind the `seqate` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod selfcheck;

pub use error::{CliError, CliResult};
