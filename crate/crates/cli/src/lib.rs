//! Config-driven runner for the `parabifurc` experiments.

pub mod config;
pub mod run;

pub use config::{validate, Command, ExperimentConfig, Violation};
pub use run::{run, run_with_files, Outcome, RunError};
