//! Reproducible experiments over `mixhom-core`: flat TOML configs, CSV/SVG/JSON
//! reports and assertion suites.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod report;
pub mod suite;

pub use config::{ExperimentConfig, EXPERIMENTS, OUTPUT_ROOT_ENV};
pub use error::{HarnessError, Result};
pub use experiments::run_experiment;
pub use report::{emit_report, ExperimentReport, Formats};
pub use suite::{run_suite, Suite, SuiteOutcome};
