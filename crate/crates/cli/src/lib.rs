//! Batch front end for `polaron-qme`: configuration, parameter scans,
//! validation suites and CSV/JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod presets;
pub mod validate;

pub use error::CliError;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
