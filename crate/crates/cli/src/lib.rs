//! Experiment harness for echo simulations: configuration, runs, sweeps and presets.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod readout;
pub mod run;
pub mod sweep;

pub use config::{ExperimentConfig, Mode};
pub use error::{LabError, Result};
pub use output::RunManifest;
