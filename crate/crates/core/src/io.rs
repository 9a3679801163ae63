//! Files emitted by searches and simulations: `config.json`, the config
//! store directory, `frontier.csv` and `outcomes.csv`.
//!
//! Reals are written with Rust's shortest round-trip formatting, so every
//! value parses back to the same bits.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::runtime::{ConfigStore, SampleOutcome};
use crate::search::FrontierEntry;

pub const STORE_DIR: &str = "store";
pub const FRONTIER_HEADER: [&str; 5] = ["lambda", "A", "C", "f", "config_path"];
pub const OUTCOMES_HEADER: [&str; 6] = ["sample_id", "exit_position", "exit_index", "confidence", "correct", "cost"];

/// Shortest decimal that parses back to `x` exactly.
pub fn format_real(x: f64) -> String {
    format!("{x}")
}

pub fn entry_to_json(entry: &FrontierEntry) -> String {
    serde_json::to_string_pretty(entry).expect("entries serialize") + "\n"
}

pub fn write_config(path: impl AsRef<Path>, entry: &FrontierEntry) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, entry_to_json(entry)).map_err(|e| Error::io(path, e))
}

pub fn read_config(path: impl AsRef<Path>) -> Result<FrontierEntry> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::SchemaViolation(format!("{}: {e}", path.display())))
}

/// Relative path of an entry inside a sweep output directory.
pub fn store_entry_path(lambda: f64) -> PathBuf {
    Path::new(STORE_DIR).join(format!("{}.json", format_real(lambda)))
}

/// Writes `<out>/store/<lambda>.json` per entry; returns the relative paths.
pub fn write_store(out_dir: impl AsRef<Path>, entries: &[FrontierEntry]) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    entries
        .iter()
        .map(|entry| {
            let rel = store_entry_path(entry.lambda);
            write_config(out_dir.join(&rel), entry)?;
            Ok(rel)
        })
        .collect()
}

/// Loads every `*.json` under `store_dir` into a [`ConfigStore`].
pub fn load_store(store_dir: impl AsRef<Path>) -> Result<ConfigStore> {
    let store_dir = store_dir.as_ref();
    let listing = fs::read_dir(store_dir).map_err(|e| Error::io(store_dir, e))?;
    let mut entries = Vec::new();
    for item in listing {
        let path = item.map_err(|e| Error::io(store_dir, e))?.path();
        if path.extension().is_some_and(|ext| ext == "json") {
            entries.push(read_config(&path)?);
        }
    }
    ConfigStore::new(entries)
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    writer.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        writer.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::SchemaViolation(format!("{}: {other:?}", path.display())),
    }
}

/// `frontier.csv` style table; `paths[i]` belongs to `entries[i]`.
pub fn write_frontier(path: impl AsRef<Path>, entries: &[FrontierEntry], paths: &[PathBuf]) -> Result<()> {
    assert_eq!(entries.len(), paths.len());
    let rows = entries.iter().zip(paths).map(|(e, p)| {
        vec![
            format_real(e.lambda),
            format_real(e.metrics.relative_accuracy),
            format_real(e.metrics.relative_complexity),
            format_real(e.metrics.objective),
            p.to_string_lossy().replace('\\', "/"),
        ]
    });
    write_csv(path.as_ref(), &FRONTIER_HEADER, rows)
}

/// One row of a parsed `frontier.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierRow {
    pub lambda: f64,
    pub accuracy: f64,
    pub complexity: f64,
    pub objective: f64,
    pub config_path: String,
}

pub fn read_frontier(path: impl AsRef<Path>) -> Result<Vec<FrontierRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().ne(FRONTIER_HEADER.iter().copied()) {
        return Err(Error::SchemaViolation(format!(
            "{}: header must be `{}`",
            path.display(),
            FRONTIER_HEADER.join(",")
        )));
    }
    let real = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::SchemaViolation(format!("{}: {s:?} is not a number", path.display())))
    };
    reader
        .records()
        .map(|record| {
            let record = record.map_err(|e| csv_error(path, e))?;
            if record.len() != FRONTIER_HEADER.len() {
                return Err(Error::SchemaViolation(format!("{}: short row", path.display())));
            }
            Ok(FrontierRow {
                lambda: real(&record[0])?,
                accuracy: real(&record[1])?,
                complexity: real(&record[2])?,
                objective: real(&record[3])?,
                config_path: record[4].to_string(),
            })
        })
        .collect()
}

/// `outcomes.csv`; positions are written 1-based.
pub fn write_outcomes(path: impl AsRef<Path>, outcomes: &[SampleOutcome]) -> Result<()> {
    let rows = outcomes.iter().map(|o| {
        vec![
            o.sample_id.to_string(),
            (o.exit_position + 1).to_string(),
            o.exit_index.to_string(),
            format_real(o.confidence),
            u8::from(o.correct).to_string(),
            format_real(o.cost),
        ]
    });
    write_csv(path.as_ref(), &OUTCOMES_HEADER, rows)
}

/// Generic table writer for ad-hoc reports (baseline, standalone).
pub fn write_table(path: impl AsRef<Path>, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    write_csv(path.as_ref(), header, rows)
}
