//! File formats, experiment configuration, reports and invariant suites on
//! top of `acsf-core`.

pub mod checks;
pub mod config;
pub mod output;
pub mod report;

pub use acsf_core as core;
pub use config::ExperimentConfig;
pub use report::{run_convergence, run_experiment, run_showcase, run_wulff, CheckRow, ExperimentReport};
