//! Batch pipeline around the `rnnbof` library: synthesize or load a cohort,
//! preprocess it, cut windows, tune and train models, score the test windows
//! and compare the scorers with a block bootstrap.

pub mod artifacts;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;

pub use cli::{execute, Cli, Command};
pub use error::{CliError, Result};
