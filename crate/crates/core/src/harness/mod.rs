//! Experiment configs, drivers and reports.

pub mod config;
pub mod experiments;
pub mod report;
pub mod search;

pub use config::{ExperimentConfig, ExperimentKind, Parameters};
pub use experiments::*;
pub use report::{Check, ExperimentReport, SCHEMA_VERSION};
pub use search::{operator_norm_lower_bound, LowerBoundReport, LOWER_BOUND_LABEL};
