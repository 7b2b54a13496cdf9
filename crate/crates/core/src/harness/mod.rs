//! Configurable experiments with reproducible artifacts.

pub mod config;
pub mod output;
pub mod scenarios;
pub mod snapshot;
pub mod sweep;

pub use config::{ExperimentConfig, InitialSpec, Scenario};
pub use output::{Check, Summary};
pub use scenarios::{build_initial, output_dir, run_scenario, trajectory_checks};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};
pub use sweep::{sweep_alpha, ConvergenceReport, ConvergenceRow};
