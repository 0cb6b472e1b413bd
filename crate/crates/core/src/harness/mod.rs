//! File I/O, experiment campaigns and the command-line interface.

pub mod cli;
pub mod csvio;
pub mod experiment;

/// Version stamped into every JSON document the harness writes.
pub const SCHEMA_VERSION: u32 = 1;

pub use experiment::{
    run_experiment, Aggregates, ExperimentConfig, ExperimentKind, ExperimentReport, TrialRecord,
};
