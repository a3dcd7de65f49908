//! Command-line driver: configuration files, subcommands and output formats.

pub mod case;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use case::{build_context, run_solve, Outcome};
pub use commands::{run, THREADS_ENV};
pub use config::{load_config, parse_config, CaseConfig, Equation};
pub use error::{CliError, CliResult};
