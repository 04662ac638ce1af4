//! Experiment harness: configuration, training runs and their outputs.

pub mod config;
pub mod run;

pub use config::{default_eta_grid, parse_config, parse_kv, Experiment, RunConfig};
pub use run::{run, run_trial, tune_eta, RunRecord, RunSummary, Task, TrialOptions, Workload, RECORD_HEADER};
