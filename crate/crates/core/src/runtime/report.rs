//! Report envelopes written as JSON with CSV mirrors of their tables.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const REPORT_VERSION: &str = concat!("sclab-", env!("CARGO_PKG_VERSION"));

/// A named numeric table, mirrored to `<stem>.<name>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Wall-clock data kept apart from the deterministic part of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub created_unix_seconds: u64,
    pub threads: usize,
}

impl Metadata {
    pub fn now(threads: usize) -> Self {
        Metadata {
            created_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            threads,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub payload: T,
    #[serde(default)]
    pub tables: Vec<Table>,
    pub metadata: Metadata,
}

impl<T: Serialize> Report<T> {
    pub fn new(experiment: impl Into<String>, config: &ExperimentConfig, payload: T) -> Self {
        Report {
            version: REPORT_VERSION.to_string(),
            experiment: experiment.into(),
            config: config.clone(),
            payload,
            tables: Vec::new(),
            metadata: Metadata::now(rayon::current_num_threads()),
        }
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.tables.push(table);
        self
    }

    /// The deterministic part: everything except the metadata block.
    pub fn payload_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Body<'a, T> {
            version: &'a str,
            experiment: &'a str,
            config: &'a ExperimentConfig,
            payload: &'a T,
            tables: &'a [Table],
        }
        Ok(serde_json::to_string_pretty(&Body {
            version: &self.version,
            experiment: &self.experiment,
            config: &self.config,
            payload: &self.payload,
            tables: &self.tables,
        })?)
    }
}

fn csv_path(json: &Path, table: &str) -> PathBuf {
    let stem = json.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    json.with_file_name(format!("{stem}.{table}.csv"))
}

/// Write `report` as JSON to `path` and each table next to it as CSV.
/// Returns every path written.
pub fn persist_report<T: Serialize>(report: &Report<T>, path: &Path) -> Result<Vec<PathBuf>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(report)?)?;
    let mut written = vec![path.to_path_buf()];
    for table in &report.tables {
        let p = csv_path(path, &table.name);
        table.write_csv(std::fs::File::create(&p)?)?;
        written.push(p);
    }
    Ok(written)
}

pub fn load_report<T: DeserializeOwned>(path: &Path) -> Result<Report<T>> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    struct Payload {
        values: Vec<f64>,
        label: String,
    }

    fn sample() -> Report<Payload> {
        let mut t = Table::new("sweep", &["r", "neck"]);
        t.push(vec![0.5, std::f64::consts::E * (std::f64::consts::E - 1.0)]);
        t.push(vec![0.4, 9.4643]);
        Report::new(
            "demo",
            &ExperimentConfig::default(),
            Payload {
                values: vec![0.1, 1.0 / 3.0, -2.5e-17],
                label: "x".into(),
            },
        )
        .with_table(t)
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("demo.json");
        let report = sample();
        let written = persist_report(&report, &path).unwrap();
        assert_eq!(written.len(), 2);
        let back: Report<Payload> = load_report(&path).unwrap();
        assert_eq!(back, report);
        let csv = std::fs::read_to_string(dir.path().join("nested").join("demo.sweep.csv")).unwrap();
        assert!(csv.starts_with("r,neck\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn payload_json_ignores_metadata() {
        let a = sample();
        let mut b = sample();
        b.metadata.created_unix_seconds += 1000;
        assert_eq!(a.payload_json().unwrap(), b.payload_json().unwrap());
    }

    #[test]
    fn concurrent_writes_to_distinct_paths() {
        let dir = tempfile::tempdir().unwrap();
        let report = sample();
        std::thread::scope(|s| {
            for i in 0..4 {
                let p = dir.path().join(format!("r{i}.json"));
                let r = &report;
                s.spawn(move || persist_report(r, &p).unwrap());
            }
        });
        for i in 0..4 {
            assert!(dir.path().join(format!("r{i}.json")).exists());
        }
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        // a regular file cannot act as a directory
        let err = persist_report(&sample(), &blocker.join("out.json")).unwrap_err();
        assert!(matches!(err, Error::Io(_)), "{err:?}");
    }
}
