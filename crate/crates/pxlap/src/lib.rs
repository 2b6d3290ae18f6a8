//! Command-line driver for `pxlap-core`: configuration files, subcommands
//! and CSV/JSON artifacts.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod setup;

pub use commands::{run, Command, Outcome, Status};
pub use config::{Config, ConfigError};
pub use setup::{AppName, CliError, Setup};
