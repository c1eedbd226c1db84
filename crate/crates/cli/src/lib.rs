//! Scenario runner for the `dynmatch` command-line tool.

pub mod commands;
pub mod error;
pub mod runner;
pub mod scenario;

pub use error::{CliError, CliResult};
pub use runner::{run_scenario, RunOptions};
pub use scenario::{Overrides, Scenario};
