//! File formats, run configuration and subcommands around `favar-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod storage;
pub mod table;

pub use error::{CliError, CliResult};
