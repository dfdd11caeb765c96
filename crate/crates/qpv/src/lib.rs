//! Command line, file formats and the parallel restart runner for
//! [`qpv_core`].
//!
//! - [`angle`]: `Npi/K` and decimal-radian angle syntax.
//! - [`config`]: the run configuration written into every artifact.
//! - [`store`]: the JSON-lines solution store and record verification.
//! - [`runner`]: a rayon-backed [`qpv_core::multistart::RestartRunner`].
//! - [`cli`] and [`commands`]: argument parsing and the subcommands.

pub mod angle;
pub mod cli;
pub mod commands;
pub mod config;
pub mod runner;
pub mod store;

pub use angle::Angle;
pub use cli::Cli;
pub use commands::{run, Body, CliError, Outcome};
pub use config::RunConfig;
pub use runner::RayonRunner;
pub use store::{SolutionRecord, SolutionStore};
