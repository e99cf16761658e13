//! Experiment runner for the `padesym` integrators: builtin experiments,
//! TOML configs, CSV output and threshold checks.

pub mod builtins;
pub mod commands;
pub mod config;
pub mod csv;
pub mod error;
pub mod experiment;

pub use commands::{RunOptions, DEFAULT_SEED};
pub use csv::CsvSeries;
pub use error::CliError;
pub use experiment::{Check, Experiment};
