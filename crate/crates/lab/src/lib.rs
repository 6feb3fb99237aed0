//! Configuration-driven experiments over `virial-core`: each run produces a
//! set of pass/fail verdicts, optional time series, and tables.

pub mod config;
pub mod diagnostics;
pub mod output;
pub mod runners;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use config::{ExperimentConfig, Kind};
pub use diagnostics::{DiagnosticsRecord, SideRecord};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Grid(#[from] virial_core::GridError),
    #[error(transparent)]
    Model(#[from] virial_core::ModelError),
    #[error(transparent)]
    Evolve(#[from] virial_core::EvolveError),
    #[error(transparent)]
    Virial(#[from] virial_core::VirialError),
    #[error(transparent)]
    Spectra(#[from] virial_core::SpectraError),
    #[error(transparent)]
    Solution(#[from] virial_core::SolutionError),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    /// Statement the check instantiates; summaries are grouped by it.
    pub group: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
    pub note: String,
}

impl Verdict {
    pub fn at_most(group: &str, name: impl Into<String>, measured: f64, threshold: f64, note: &str) -> Self {
        Self {
            name: name.into(),
            group: group.into(),
            measured,
            threshold,
            pass: measured <= threshold,
            note: note.into(),
        }
    }

    pub fn at_least(group: &str, name: impl Into<String>, measured: f64, threshold: f64, note: &str) -> Self {
        Self {
            name: name.into(),
            group: group.into(),
            measured,
            threshold,
            pass: measured >= threshold,
            note: note.into(),
        }
    }

    pub fn within(group: &str, name: impl Into<String>, measured: f64, lo: f64, hi: f64, note: &str) -> Self {
        Self {
            name: name.into(),
            group: group.into(),
            measured,
            threshold: hi,
            pass: measured >= lo && measured <= hi,
            note: format!("{note} (accepted range [{lo}, {hi}])"),
        }
    }

    pub fn equals(group: &str, name: impl Into<String>, measured: usize, expected: usize, note: &str) -> Self {
        Self {
            name: name.into(),
            group: group.into(),
            measured: measured as f64,
            threshold: expected as f64,
            pass: measured == expected,
            note: note.into(),
        }
    }
}

/// Plain rectangular table written as CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub verdicts: Vec<Verdict>,
    /// `(label, records)`; a single unlabeled series goes to `series.csv`.
    pub series: Vec<(String, Vec<DiagnosticsRecord>)>,
    /// `(file stem, table)`.
    pub tables: Vec<(String, Table)>,
    pub measurements: BTreeMap<String, f64>,
}

impl RunOutput {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    fn merge(&mut self, other: RunOutput) {
        self.verdicts.extend(other.verdicts);
        self.series.extend(other.series);
        self.tables.extend(other.tables);
        self.measurements.extend(other.measurements);
    }
}

/// Runs `cfg` on a dedicated pool of `threads` workers (`0` lets rayon pick).
pub fn run_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<RunOutput, LabError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Pool(e.to_string()))?;
    pool.install(|| runners::run(cfg))
}
