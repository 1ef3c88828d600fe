//! Benchmark harness for `medlq-core`: environment files, multi-seed regret
//! experiments, interquartile aggregation, CSV output, the interpolation
//! landscape and the candidate sample-size study.
//!
//! Everything here is deterministic given the experiment description and its
//! base seed; only the wall-time columns vary between runs.

pub mod aggregate;
pub mod envfile;
mod error;
pub mod landscape;
pub mod registry;
pub mod report;
pub mod runner;
pub mod spec;
pub mod study;

pub use error::{BenchError, Result};
pub use runner::{run_experiment, ExperimentTrace};
pub use spec::{ExperimentSpec, Scenario};
