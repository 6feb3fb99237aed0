use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diagnostics::{DiagnosticsRecord, COLUMNS};
use crate::{ExperimentConfig, LabError, RunOutput, Table, Verdict};

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), LabError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn series_csv(records: &[DiagnosticsRecord]) -> Result<Vec<u8>, LabError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(r.row().iter().map(|v| v.to_string()))?;
    }
    w.into_inner().map_err(|e| LabError::Io(e.into_error()))
}

pub fn table_csv(table: &Table) -> Result<Vec<u8>, LabError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| LabError::Io(e.into_error()))
}

#[derive(Serialize)]
struct VerdictEntry<'a> {
    name: &'a str,
    measured: f64,
    threshold: f64,
    pass: bool,
    note: &'a str,
}

#[derive(Serialize)]
struct Summary<'a> {
    kind: &'a str,
    all_pass: bool,
    config: &'a ExperimentConfig,
    verdicts: BTreeMap<&'a str, Vec<VerdictEntry<'a>>>,
    measurements: &'a BTreeMap<String, f64>,
    versions: BTreeMap<&'static str, &'static str>,
}

pub fn summary_json(cfg: &ExperimentConfig, out: &RunOutput) -> Result<Vec<u8>, LabError> {
    let mut verdicts: BTreeMap<&str, Vec<VerdictEntry>> = BTreeMap::new();
    for Verdict {
        name,
        group,
        measured,
        threshold,
        pass,
        note,
    } in &out.verdicts
    {
        verdicts.entry(group.as_str()).or_default().push(VerdictEntry {
            name,
            measured: *measured,
            threshold: *threshold,
            pass: *pass,
            note,
        });
    }
    let summary = Summary {
        kind: cfg.kind.as_str(),
        all_pass: out.all_pass(),
        config: cfg,
        verdicts,
        measurements: &out.measurements,
        versions: [("virial-lab", env!("CARGO_PKG_VERSION")), ("virial-core", virial_core::VERSION)]
            .into_iter()
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&summary)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// `series.csv` (or `<label>/series.csv` when there are several), one CSV per
/// table, and `summary.json`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, out: &RunOutput) -> Result<(), LabError> {
    fs::create_dir_all(dir)?;
    let single = out.series.len() == 1;
    for (label, records) in &out.series {
        let path = if single || label.is_empty() {
            dir.join("series.csv")
        } else {
            dir.join(label).join("series.csv")
        };
        write_atomic(&path, &series_csv(records)?)?;
    }
    for (stem, table) in &out.tables {
        write_atomic(&dir.join(format!("{stem}.csv")), &table_csv(table)?)?;
    }
    write_atomic(&dir.join("summary.json"), &summary_json(cfg, out)?)
}
