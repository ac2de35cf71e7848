//! Experiment orchestration: datasets, configuration, the staged training
//! protocol, the theory suite, reporting, and checkpoints.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod pipeline;
pub mod plots;
pub mod report;
pub mod theory;

pub use checkpoint::Checkpoint;
pub use config::ExperimentConfig;
pub use dataset::{DatasetKind, DatasetSpec};
pub use pipeline::{run_staged_pipeline, TrainedSystem};
pub use report::{emit, CheckStatus, EmitFormat, Report, Section};
pub use theory::run_theory_suite;
