//! Command-line front end for the data-completion solvers and studies.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;

pub use config::Config;
pub use error::CliError;
pub use manifest::RunManifest;
pub use run::{plan, run, threads_from_env, Command, RunOptions};

/// Exit code when every flag passed.
pub const EXIT_PASS: i32 = 0;
/// Exit code on any error.
pub const EXIT_ERROR: i32 = 1;
/// Exit code when the run finished but some flag failed.
pub const EXIT_FLAG_FAIL: i32 = 2;
