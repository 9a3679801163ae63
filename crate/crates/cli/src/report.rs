use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dyce_core::trace::{Manifest, MANIFEST_FILE};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct InputDigests {
    pub manifest_sha256: String,
    pub trace_sha256: String,
}

/// Provenance record written next to every command's outputs. The wall
/// time is the only non-deterministic field.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: InputDigests,
    pub settings: serde_json::Value,
    pub wall_time_s: f64,
    pub outputs: Vec<PathBuf>,
}

fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn digest_inputs(trace_path: &Path) -> CliResult<InputDigests> {
    let manifest_path = if trace_path.is_dir() {
        trace_path.join(MANIFEST_FILE)
    } else {
        trace_path.to_path_buf()
    };
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| CliError::input(format!("{}: {e}", manifest_path.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", manifest_path.display())))?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    Ok(InputDigests {
        manifest_sha256: sha256_file(&manifest_path)?,
        trace_sha256: sha256_file(&dir.join(manifest.trace))?,
    })
}

pub struct RunTimer {
    command: &'static str,
    started: Instant,
}

impl RunTimer {
    pub fn start(command: &'static str) -> Self {
        Self {
            command,
            started: Instant::now(),
        }
    }

    /// Writes the report to `path` and returns it.
    pub fn finish(
        self,
        path: &Path,
        inputs: InputDigests,
        settings: serde_json::Value,
        outputs: Vec<PathBuf>,
    ) -> CliResult<RunReport> {
        let report = RunReport {
            command: self.command.to_string(),
            inputs,
            settings,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            outputs,
        };
        let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
        fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Ok(report)
    }
}

/// `config.json` -> `config.run.json`; directories get `run_report.json`.
pub fn report_path_for(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        return out.join("run_report.json");
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{stem}.run.json"))
}
