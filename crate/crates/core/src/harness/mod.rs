//! Experiment configuration, bundled experiments, reports and the
//! verification suite.

pub mod bundled;
pub mod config;
pub mod report;
pub mod verify;

pub use config::{ExperimentConfig, DEFAULT_SEED};
pub use report::{emit_report, render, run_experiment, Check, Report, ReportFormat, Row, Timing};
pub use verify::{verify_all, verify_suite, Group, Outcome, VerifyTable};
