//! Standard-library companion to `sepstat-core`: JSON file formats, CSV
//! emission, run configuration, rayon-parallel drivers and the command
//! implementations behind the `sepstat` binary.

pub mod commands;
pub mod config;
pub mod csv;
pub mod error;
pub mod io;
pub mod parallel;

pub use error::{CliError, ExitCode};
