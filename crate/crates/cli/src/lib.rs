//! Command-line front end for `proxsample`: config parsing and the
//! `sample`, `verify`, `minimize` and `bench` commands.

pub mod commands;
pub mod config;

pub use commands::{cmd_bench, cmd_minimize, cmd_sample, cmd_verify, resolve, CliError, VerifyOptions};
pub use config::{ConfigError, RunConfig};
