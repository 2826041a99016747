//! Command-line front end for `coopkin-core`: scenario files, log formats
//! and the `simulate`, `calibrate`, `analyze` and `pe-audit` subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod logs;

pub use error::{CliError, CliResult};
