//! Command implementations behind the `petrowave` binary.

pub mod commands;
pub mod config;
pub mod exit;

pub use commands::{cmd_check, cmd_envelope, cmd_fit, cmd_simulate, cmd_sweep, FitArgs, Outcome};
pub use config::ExperimentConfig;
pub use exit::CliError;
