//! Command-line front end: configuration, CSV ingestion and the `fit`, `tune`,
//! `predict`, `simulate`, `tecator`, `convert-tecator` and `diagnose` subcommands.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod model;

pub use cli::{run, Cli, Command};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
