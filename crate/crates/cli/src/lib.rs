//! Experiment harness: verification suite, phase-diagram runs, bound tables
//! and plots for the `ldgap` binary.

pub mod config;
pub mod error;
pub mod ldbound;
pub mod phase;
pub mod plot;
pub mod verify;

pub use config::{EstimatorName, ExperimentConfig, GridPoint, OutputFormat, RawConfig};
pub use error::{HarnessError, HarnessResult};
pub use phase::{render, render_csv, render_json_lines, run_phase, PhaseRecord, ResultRow};
pub use verify::{run_verify, CheckResult, Fault, Level, VerifyReport};
