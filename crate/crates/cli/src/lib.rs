//! Library side of the `gcalc` binary: configuration, subcommands, suites
//! and run manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod suites;

pub use config::Config;
pub use error::{CliError, Result};
pub use manifest::RunManifest;
