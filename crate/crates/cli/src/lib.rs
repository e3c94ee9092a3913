//! File formats, configuration, plotting and the `psne` command line.
//!
//! Exit codes of the binary are listed in [`error::exit`].

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod plot;

pub use error::{CliError, Result};
