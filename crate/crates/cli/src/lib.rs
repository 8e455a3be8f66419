//! Batch runner for the landau-core laboratory: configuration files, named
//! experiments, CSV and SVG artifacts, and parameter sweeps.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod sweep;

pub use config::{load_config, parse_config, Experiment, ExperimentConfig};
pub use error::RunError;
pub use experiments::run_experiment;
