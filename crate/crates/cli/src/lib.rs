//! Experiment harness around `consumax-core`: configuration loading and
//! validation against the standing hypotheses, simulation runs with CSV/JSON
//! artifacts, ε-sweeps, continuity and refinement studies, and closed-form
//! certification of the scalar estimates.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{load_config, parse_config, ExperimentConfig, VerifyParams};
pub use error::{CliError, Result};
