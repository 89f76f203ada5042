//! Convergence experiments over an N grid with Monte Carlo replication:
//! flat `key = value` configs, the default suite, CSV and JSON reports.

mod config;
mod report;
mod run;

pub use config::{preset, ExperimentConfig, Prepared, SetSpec, DEFAULT_DIAGNOSTIC_COPIES, DEFAULT_HIT_RADIUS, DEFAULT_PROBE_MARGIN, DEFAULT_SEED, PRESETS};
pub use report::{
    emit_report, quantile, rate_fit, read_json, strictly_decreasing, write_csv, write_json, CellSummary, ConvergenceReport,
    Diagnostics, ErrorRow, HitRecord, Metadata, RateFit, ReportFormat, SeriesSummary, CSV_HEADER,
};
pub use run::{replication_seed, run_experiment};

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("run failed at N = {n}, replication {replication}, j = {j}: {message}")]
    Run { n: usize, replication: usize, j: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl HarnessError {
    /// Whether the error stems from user input rather than from running.
    pub fn is_validation(&self) -> bool {
        matches!(self, Self::Parse { .. } | Self::Invalid(_))
    }
}

impl From<DynamicsError> for HarnessError {
    fn from(e: DynamicsError) -> Self {
        Self::Invalid(e.to_string())
    }
}

impl From<GeometryError> for HarnessError {
    fn from(e: GeometryError) -> Self {
        Self::Invalid(e.to_string())
    }
}
