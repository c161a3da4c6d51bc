//! Experiment harness behind the `stboost` binary.

pub mod config;
pub mod harness;
pub mod output;
pub mod stats;

pub use config::{Algorithm, DatasetSpec, ExperimentConfig, SamplingParams, OUTPUT_DIR_ENV};
pub use harness::{
    cell_seed, run_ablation, run_comparative, run_complexity, run_negative_transfer, ResultRow, ResultTable,
    RunOutcome, SummaryRow,
};
