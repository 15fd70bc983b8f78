//! Scenario loading, the alternating driver, and seeded experiments.

pub mod alternating;
pub mod config;
pub mod experiment;

pub use alternating::{alternating_optimize, AlternatingOptions, AlternatingOutcome};
pub use config::{load_scenario, load_scenario_over, scenario_from_str};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentOutput};
