//! Experiment harness: TOML-configured runs with deterministic JSON/CSV
//! output.

pub mod config;
pub mod emit;
pub mod run;

pub use config::{ConfigError, ExperimentConfig};
pub use emit::{emit, summary};
pub use run::{run, HarnessError, Payload, ResultRecord};
