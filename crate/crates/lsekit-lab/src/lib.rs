//! Experiment harness around the level-set active-learning core: experiment
//! configuration, multi-seed runners, aggregation, bound checking, CSV/SVG
//! emission, and data ingestion.

#![warn(missing_docs)]

pub mod config;
pub mod emit;
pub mod ingest;
pub mod report;
pub mod runner;

pub use config::{ExperimentConfig, LabError};
pub use runner::{run_experiment, IterRow, RunRecord};
