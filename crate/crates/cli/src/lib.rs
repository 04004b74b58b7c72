//! Experiment harness: JSON configs, seeded parallel trials, CSV / JSON
//! reports and the acceptance suite.

pub mod config;
pub mod error;
pub mod report;
pub mod runner;
pub mod suite;

pub use config::{ExperimentConfig, ProtocolConfig};
pub use error::HarnessError;
pub use report::{emit_reports, ExperimentReport, Format, Summary, TrialRecord};
pub use runner::{run_experiment, run_trial, trial_seed, RunOptions};
pub use suite::{default_suite, run_suite, SuiteConfig, SuiteOutcome};
