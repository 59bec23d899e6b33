//! Library side of the `condense` command: subcommands as functions returning
//! [`report::RunReport`]s, so tests and the binary share one code path.

pub mod commands;
pub mod report;
pub mod scenarios;

pub use commands::{CliError, CliResult, Settings};
pub use report::{Format, RunReport, Status};
