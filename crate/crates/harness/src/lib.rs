//! Experiment runner for weighted inequalities on finite spaces of
//! homogeneous type: configs in, deterministic JSON/CSV reports out.

pub mod candidates;
pub mod config;
pub mod criteria;
pub mod experiments;
pub mod oracle;
pub mod report;
pub mod setup;
pub mod suite;

use thiserror::Error;

use sht_core::dyadic::GridError;
use sht_core::operators::OperatorError;
use sht_core::space::SpaceError;
use sht_core::weights::WeightError;

pub use config::{ExperimentConfig, CONFIG_SCHEMA};
pub use experiments::{run, Experiment, Registry};
pub use report::{to_stable_json, ExperimentReport, Fit, Record, ReportFormat, Verdict, REPORT_SCHEMA};
pub use setup::Setup;
pub use suite::{suite, SuiteLevel, SuiteOptions, SuiteReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("kernel: {0}")]
    Kernel(String),
    #[error("unknown experiment kind {0:?}")]
    UnknownKind(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}
