//! Exit traces, cost models and their on-disk format.
//!
//! A trace directory holds a `manifest.json` (shape, costs, base accuracy)
//! and a long-format `trace.csv` with one row per (sample, position, exit).
//! Positions and exit indices are 1-based on disk; in memory positions are
//! 0-based while exit indices keep their 1-based meaning (0 = "no exit").

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for `Σ S_n = 1`.
pub const SEGMENT_SUM_TOLERANCE: f64 = 1e-6;
/// Tolerance for `a_ori` against the final-exit correctness rate.
pub const BASE_ACCURACY_TOLERANCE: f64 = 1e-9;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRACE_HEADER: [&str; 5] = ["sample_id", "position", "exit_index", "confidence", "correct"];

/// Recorded outputs of one candidate exit over every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitColumn {
    pub confidence: Vec<f64>,
    pub correct: Vec<bool>,
}

impl ExitColumn {
    pub fn correct_count(&self) -> usize {
        self.correct.iter().filter(|&&c| c).count()
    }
}

/// Per-sample confidences and correctness for every candidate exit.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitTrace {
    sample_count: usize,
    candidates: Vec<usize>,
    // columns[n][k - 1]
    columns: Vec<Vec<ExitColumn>>,
}

impl ExitTrace {
    /// Builds a trace from per-position candidate columns, checking every invariant.
    pub fn new(sample_count: usize, columns: Vec<Vec<ExitColumn>>) -> Result<Self> {
        if sample_count == 0 {
            return Err(Error::InvariantViolation("sample count M must be >= 1".into()));
        }
        if columns.is_empty() {
            return Err(Error::InvariantViolation("position count N must be >= 1".into()));
        }
        if columns.last().map_or(0, Vec::len) == 0 {
            return Err(Error::InvariantViolation(format!(
                "final position {} has no original-head exit (K_N must be >= 1)",
                columns.len()
            )));
        }
        for (n, position) in columns.iter().enumerate() {
            for (k, column) in position.iter().enumerate() {
                if column.confidence.len() != sample_count || column.correct.len() != sample_count {
                    return Err(Error::InvariantViolation(format!(
                        "exit (n={}, k={}) has {} confidence and {} correctness entries, expected M={}",
                        n + 1,
                        k + 1,
                        column.confidence.len(),
                        column.correct.len(),
                        sample_count
                    )));
                }
                for (m, &c) in column.confidence.iter().enumerate() {
                    if !(0.0..=1.0).contains(&c) {
                        return Err(Error::InvariantViolation(format!(
                            "confidence {c} out of [0,1] at (m={m}, n={}, k={})",
                            n + 1,
                            k + 1
                        )));
                    }
                }
            }
        }
        let candidates = columns.iter().map(Vec::len).collect();
        Ok(Self {
            sample_count,
            candidates,
            columns,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn position_count(&self) -> usize {
        self.candidates.len()
    }

    /// `K_n` for every position.
    pub fn candidates_per_position(&self) -> &[usize] {
        &self.candidates
    }

    pub fn candidates(&self, position: usize) -> usize {
        self.candidates[position]
    }

    /// Column of exit `k >= 1` at 0-based `position`.
    pub fn column(&self, position: usize, k: usize) -> &ExitColumn {
        assert!(k >= 1, "exit index 0 means no exit and has no column");
        &self.columns[position][k - 1]
    }

    pub fn confidence(&self, sample: usize, position: usize, k: usize) -> f64 {
        self.column(position, k).confidence[sample]
    }

    pub fn correct(&self, sample: usize, position: usize, k: usize) -> bool {
        self.column(position, k).correct[sample]
    }

    /// Fraction of samples the original head (final position, exit 1) gets right.
    pub fn final_accuracy(&self) -> f64 {
        let head = self.column(self.position_count() - 1, 1);
        head.correct_count() as f64 / self.sample_count as f64
    }
}

/// Normalized MAC costs and the original model's accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// `S_n`, fraction of backbone MACs spent in segment `n`.
    pub segment_cost: Vec<f64>,
    /// `Δ[n][k]` for `k in 0..=K_n`; `Δ[n][0] = 0`.
    pub exit_cost: Vec<Vec<f64>>,
    /// `A_ori`.
    pub base_accuracy: f64,
}

impl CostModel {
    pub fn position_count(&self) -> usize {
        self.segment_cost.len()
    }

    /// Checks the cost-model invariants, and its pairing with `trace` when given.
    pub fn validate(&self, trace: Option<&ExitTrace>) -> Result<()> {
        let n_pos = self.segment_cost.len();
        if n_pos == 0 {
            return Err(Error::InvariantViolation("segment cost list S is empty".into()));
        }
        if self.exit_cost.len() != n_pos {
            return Err(Error::InvariantViolation(format!(
                "delta has {} rows but S has {} positions",
                self.exit_cost.len(),
                n_pos
            )));
        }
        for (n, &s) in self.segment_cost.iter().enumerate() {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::InvariantViolation(format!(
                    "segment cost S_{} = {s} must be finite and >= 0",
                    n + 1
                )));
            }
        }
        let total: f64 = self.segment_cost.iter().sum();
        if (total - 1.0).abs() > SEGMENT_SUM_TOLERANCE {
            return Err(Error::InvariantViolation(format!("segment costs sum to {total}")));
        }
        for (n, row) in self.exit_cost.iter().enumerate() {
            match row.first() {
                None => {
                    return Err(Error::InvariantViolation(format!(
                        "delta row for position {} is empty (needs the k=0 entry)",
                        n + 1
                    )))
                }
                Some(&d) if d != 0.0 => {
                    return Err(Error::InvariantViolation(format!(
                        "delta[{}][0] = {d}, the disabled exit must cost 0",
                        n + 1
                    )))
                }
                _ => {}
            }
            for (k, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvariantViolation(format!(
                        "delta[{}][{k}] = {d} must be finite and >= 0",
                        n + 1
                    )));
                }
            }
        }
        if !(self.base_accuracy > 0.0 && self.base_accuracy <= 1.0) {
            return Err(Error::InvariantViolation(format!(
                "a_ori = {} must lie in (0, 1]",
                self.base_accuracy
            )));
        }
        if let Some(trace) = trace {
            if trace.position_count() != n_pos {
                return Err(Error::InvariantViolation(format!(
                    "trace has N={} positions but costs have {}",
                    trace.position_count(),
                    n_pos
                )));
            }
            for (n, row) in self.exit_cost.iter().enumerate() {
                if row.len() != trace.candidates(n) + 1 {
                    return Err(Error::InvariantViolation(format!(
                        "delta row for position {} has {} entries, expected K_n + 1 = {}",
                        n + 1,
                        row.len(),
                        trace.candidates(n) + 1
                    )));
                }
            }
            let measured = trace.final_accuracy();
            if (measured - self.base_accuracy).abs() > BASE_ACCURACY_TOLERANCE {
                return Err(Error::InvariantViolation(format!(
                    "a_ori = {} but final-exit correct rate is {measured}",
                    self.base_accuracy
                )));
            }
        }
        Ok(())
    }
}

/// On-disk `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub name: String,
    #[serde(rename = "M")]
    pub sample_count: usize,
    #[serde(rename = "N")]
    pub position_count: usize,
    #[serde(rename = "K")]
    pub candidates: Vec<usize>,
    #[serde(rename = "S")]
    pub segment_cost: Vec<f64>,
    pub delta: Vec<Vec<f64>>,
    pub a_ori: f64,
    pub trace: String,
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Loads and validates a trace. `path` is either a manifest file or a
/// directory containing `manifest.json`.
pub fn load_trace(path: impl AsRef<Path>) -> Result<(ExitTrace, CostModel)> {
    let manifest_file = manifest_path(path.as_ref());
    let text = fs::read_to_string(&manifest_file).map_err(|e| Error::io(&manifest_file, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::SchemaViolation(format!("{}: {e}", manifest_file.display())))?;
    if manifest.version != 1 {
        return Err(Error::SchemaViolation(format!(
            "unsupported manifest version {}",
            manifest.version
        )));
    }
    if manifest.candidates.len() != manifest.position_count
        || manifest.segment_cost.len() != manifest.position_count
        || manifest.delta.len() != manifest.position_count
    {
        return Err(Error::InvariantViolation(format!(
            "manifest N={} but K, S, delta have lengths {}, {}, {}",
            manifest.position_count,
            manifest.candidates.len(),
            manifest.segment_cost.len(),
            manifest.delta.len()
        )));
    }
    let costs = CostModel {
        segment_cost: manifest.segment_cost.clone(),
        exit_cost: manifest.delta.clone(),
        base_accuracy: manifest.a_ori,
    };
    // Cost checks first so that a bad S is reported before the trace is read.
    costs.validate(None)?;

    let dir = manifest_file.parent().unwrap_or_else(|| Path::new("."));
    let trace_file = dir.join(&manifest.trace);
    let trace = read_trace_csv(&trace_file, &manifest)?;
    costs.validate(Some(&trace))?;
    Ok((trace, costs))
}

fn read_trace_csv(path: &Path, manifest: &Manifest) -> Result<ExitTrace> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::SchemaViolation(format!("{}: {e}", path.display())))?
        .clone();
    if headers.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::SchemaViolation(format!(
            "{}: header must be `{}`",
            path.display(),
            TRACE_HEADER.join(",")
        )));
    }

    let m_count = manifest.sample_count;
    if m_count == 0 {
        return Err(Error::InvariantViolation("sample count M must be >= 1".into()));
    }
    let mut columns: Vec<Vec<ExitColumn>> = manifest
        .candidates
        .iter()
        .map(|&k| {
            (0..k)
                .map(|_| ExitColumn {
                    confidence: vec![f64::NAN; m_count],
                    correct: vec![false; m_count],
                })
                .collect()
        })
        .collect();
    let mut seen = HashSet::new();

    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record =
            record.map_err(|e| Error::SchemaViolation(format!("{} line {line}: {e}", path.display())))?;
        if record.len() != TRACE_HEADER.len() {
            return Err(Error::SchemaViolation(format!(
                "{} line {line}: expected 5 fields, found {}",
                path.display(),
                record.len()
            )));
        }
        let field = |i: usize| &record[i];
        let parse_usize = |i: usize| -> Result<usize> {
            field(i).parse().map_err(|_| {
                Error::SchemaViolation(format!(
                    "{} line {line}: field `{}` = {:?} is not a non-negative integer",
                    path.display(),
                    TRACE_HEADER[i],
                    field(i)
                ))
            })
        };
        let m = parse_usize(0)?;
        let n = parse_usize(1)?;
        let k = parse_usize(2)?;
        let confidence: f64 = field(3).parse().map_err(|_| {
            Error::SchemaViolation(format!(
                "{} line {line}: confidence {:?} is not a number",
                path.display(),
                field(3)
            ))
        })?;
        let correct = match field(4) {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::SchemaViolation(format!(
                    "{} line {line}: correct must be 0 or 1, found {other:?}",
                    path.display()
                )))
            }
        };
        if m >= m_count {
            return Err(Error::InvariantViolation(format!(
                "line {line}: sample_id {m} out of range 0..{m_count}"
            )));
        }
        if n == 0 || n > manifest.position_count {
            return Err(Error::InvariantViolation(format!(
                "line {line}: position {n} out of range 1..={}",
                manifest.position_count
            )));
        }
        if k == 0 || k > manifest.candidates[n - 1] {
            return Err(Error::InvariantViolation(format!(
                "line {line}: exit_index {k} out of range 1..={} at position {n}",
                manifest.candidates[n - 1]
            )));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvariantViolation(format!(
                "confidence {confidence} out of [0,1] at (m={m}, n={n}, k={k})"
            )));
        }
        if !seen.insert((m, n, k)) {
            return Err(Error::InvariantViolation(format!(
                "duplicate row for (m={m}, n={n}, k={k}) at line {line}"
            )));
        }
        let column = &mut columns[n - 1][k - 1];
        column.confidence[m] = confidence;
        column.correct[m] = correct;
    }

    for (n, position) in columns.iter().enumerate() {
        for (k, column) in position.iter().enumerate() {
            if let Some(m) = column.confidence.iter().position(|c| c.is_nan()) {
                return Err(Error::InvariantViolation(format!(
                    "missing row for (m={m}, n={}, k={})",
                    n + 1,
                    k + 1
                )));
            }
        }
    }
    ExitTrace::new(m_count, columns)
}

/// Writes `manifest.json` and `trace.csv` into `dir`, creating it if needed.
pub fn write_trace(dir: impl AsRef<Path>, name: &str, trace: &ExitTrace, costs: &CostModel) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        version: 1,
        name: name.to_string(),
        sample_count: trace.sample_count(),
        position_count: trace.position_count(),
        candidates: trace.candidates_per_position().to_vec(),
        segment_cost: costs.segment_cost.clone(),
        delta: costs.exit_cost.clone(),
        a_ori: costs.base_accuracy,
        trace: "trace.csv".into(),
    };
    let manifest_file = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_file, text + "\n").map_err(|e| Error::io(&manifest_file, e))?;

    let trace_file = dir.join(&manifest.trace);
    let mut out = String::with_capacity(trace.sample_count() * trace.position_count() * 24);
    out.push_str(&TRACE_HEADER.join(","));
    out.push('\n');
    for n in 0..trace.position_count() {
        for k in 1..=trace.candidates(n) {
            let column = trace.column(n, k);
            for m in 0..trace.sample_count() {
                // `Display` for f64 is the shortest string that parses back to the same bits.
                out.push_str(&format!(
                    "{m},{},{k},{},{}\n",
                    n + 1,
                    column.confidence[m],
                    u8::from(column.correct[m])
                ));
            }
        }
    }
    fs::write(&trace_file, out).map_err(|e| Error::io(&trace_file, e))
}
