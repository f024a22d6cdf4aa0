//! Experiment harness: configuration, table and job runners, and their CSV
//! and JSON output.
//!
//! The `sbeq` binary is a thin wrapper over [`cli::run`]; the runners are
//! public so tests can drive them without going through files.

pub mod cli;
pub mod config;
pub mod evaluate;
pub mod jobs;
pub mod output;
pub mod phase;
pub mod psi;
pub mod sweep;

pub use config::{Config, ConfigError, Grid, MethodName, Setup};
