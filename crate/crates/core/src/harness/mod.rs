//! Experiment plumbing: JSON configs, the Monte Carlo ensemble, report
//! files and the subcommands behind the `jumpnls` binary.

pub mod commands;
pub mod config;
pub mod ensemble;
pub mod output;

pub use commands::RunOptions;
pub use config::{ExperimentConfig, ProfileSpec};
pub use ensemble::{fit_coverage_trend, moment_estimate, run_ensemble, CoverageFit, EnsembleReport, EnsembleRun};
