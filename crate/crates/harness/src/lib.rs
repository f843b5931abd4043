//! Seeded Monte-Carlo experiments for out-of-band aided mmWave covariance
//! estimation, plus the configuration and CSV plumbing of the `oobcov` CLI.

pub mod config;
pub mod error;
pub mod experiments;
pub mod link;
pub mod output;
pub mod seed;
pub mod stats;

pub use config::ExperimentConfig;
pub use error::HarnessError;
pub use experiments::{run_experiment, run_experiment_with, sweep_j_rho, Experiment, Scenario};
pub use output::ResultRow;
