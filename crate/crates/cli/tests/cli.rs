use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dyce_core::io::{read_config, read_frontier};
use tempfile::TempDir;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/t4")
}

fn dyce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyce")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn assert_ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_t4() {
    let out = dyce(&["validate", "--trace", &s(&fixture())]);
    assert_ok(&out);
    assert_eq!(stdout(&out).trim(), "ok: M=4 N=2 K=[1,1] a_ori=0.75 (0 violations)");
}

#[test]
fn search_t4_writes_config_and_report() {
    let work = TempDir::new().unwrap();
    let config = work.path().join("config.json");
    let out = dyce(&["search", "--trace", &s(&fixture()), "--lambda", "0.5", "--algo", "single-pass", "--out", &s(&config)]);
    assert_ok(&out);
    let printed = stdout(&out);
    assert!(printed.contains("k = [1,1]"));
    assert!(printed.contains("t = [0.8,0]"));

    let entry = read_config(&config).unwrap();
    assert_eq!(entry.config.k, vec![1, 1]);
    assert_eq!(entry.config.t, vec![0.8, 0.0]);
    assert!((entry.metrics.objective - 0.208_333_333_333_333_3).abs() < 1e-12);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(work.path().join("config.run.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "search");
    assert_eq!(report["inputs"]["manifest_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn golden_and_iterative_agree_on_t4() {
    let work = TempDir::new().unwrap();
    let trace = s(&fixture());
    for (name, extra) in [("golden", ["--threshold", "golden"]), ("iterative", ["--algo", "iterative"])] {
        let config = work.path().join(format!("{name}.json"));
        let config_arg = s(&config);
        let mut args = vec!["search", "--trace", &trace, "--lambda", "0.5", "--out", &config_arg];
        args.extend(extra);
        assert_ok(&dyce(&args));
        assert_eq!(read_config(&config).unwrap().config.k, vec![1, 1], "{name}");
    }
}

#[test]
fn lambda_out_of_range_is_input_error() {
    let work = TempDir::new().unwrap();
    let out = dyce(&["search", "--trace", &s(&fixture()), "--lambda", "1.5", "--out", &s(&work.path().join("c.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda out of range"));
}

#[test]
fn missing_trace_is_input_error() {
    let out = dyce(&["validate", "--trace", "/nonexistent/trace"]);
    assert_eq!(out.status.code(), Some(2));
    let out = dyce(&["validate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_manifest_is_input_error() {
    let work = TempDir::new().unwrap();
    std::fs::copy(fixture().join("trace.csv"), work.path().join("trace.csv")).unwrap();
    let manifest = std::fs::read_to_string(fixture().join("manifest.json")).unwrap();
    std::fs::write(work.path().join("manifest.json"), manifest.replace("[0.4, 0.6]", "[0.5, 0.6]")).unwrap();
    let out = dyce(&["validate", "--trace", &s(work.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("segment costs"));
}

#[test]
fn sweep_t4_half_steps() {
    let work = TempDir::new().unwrap();
    let dir = work.path().join("sweep");
    let out = dyce(&["sweep", "--trace", &s(&fixture()), "--start", "0", "--end", "1", "--step", "0.5", "--out", &s(&dir)]);
    assert_ok(&out);
    let rows = read_frontier(dir.join("frontier.csv")).unwrap();
    assert_eq!(rows.iter().map(|r| r.lambda).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
    for row in &rows {
        assert!(dir.join(&row.config_path).is_file());
    }
    let pareto = read_frontier(dir.join("frontier_pareto.csv")).unwrap();
    for w in pareto.windows(2) {
        assert!(w[0].complexity < w[1].complexity && w[0].accuracy < w[1].accuracy);
    }
    assert!(dir.join("run_report.json").is_file());
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let work = TempDir::new().unwrap();
    let trace = work.path().join("trace");
    assert_ok(&dyce(&["synthesize", "--seed", "9", "--samples", "150", "--candidates", "2,1,2,1", "--out", &s(&trace)]));
    let mut frontiers = Vec::new();
    for threads in ["1", "4"] {
        let dir = work.path().join(format!("sweep{threads}"));
        assert_ok(&dyce(&[
            "sweep", "--trace", &s(&trace), "--step", "0.1", "--threads", threads, "--out", &s(&dir),
        ]));
        frontiers.push(std::fs::read(dir.join("frontier.csv")).unwrap());
    }
    assert_eq!(frontiers[0], frontiers[1]);
}

#[test]
fn bad_sweep_grid_is_input_error() {
    let work = TempDir::new().unwrap();
    for args in [["--step", "0"], ["--end", "1.5"]] {
        let mut all = vec!["sweep", "--trace"];
        let trace = s(&fixture());
        let out_dir = s(&work.path().join("sweep"));
        all.push(&trace);
        all.extend(args);
        all.extend(["--out", &out_dir]);
        assert_eq!(dyce(&all).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn simulate_writes_outcomes() {
    let work = TempDir::new().unwrap();
    let config = work.path().join("config.json");
    assert_ok(&dyce(&["search", "--trace", &s(&fixture()), "--lambda", "0.5", "--out", &s(&config)]));
    let outcomes = work.path().join("outcomes.csv");
    let out = dyce(&["simulate", "--trace", &s(&fixture()), "--config", &s(&config), "--out", &s(&outcomes)]);
    assert_ok(&out);
    let metrics: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(metrics["E"], serde_json::json!([2, 2]));
    assert_eq!(metrics["EC"], serde_json::json!([2, 2]));

    let mut reader = csv::Reader::from_path(&outcomes).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    let positions: Vec<&str> = rows.iter().map(|r| &r[1]).collect();
    assert_eq!(positions, vec!["1", "2", "1", "2"]);
    let cost: f64 = rows[3][5].parse().unwrap();
    assert!((cost - 1.05).abs() < 1e-12);
}

#[test]
fn simulate_rejects_config_for_other_trace() {
    let work = TempDir::new().unwrap();
    let config = work.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"lambda":0.5,"k":[1,1,1],"t":[0.5,0.5,0.0],"metrics":{"E":[0,0,4],"EC":[0,0,3],"A":1.0,"C":1.0,"f":0.5,"lambda":0.5}}"#,
    )
    .unwrap();
    let out = dyce(&["simulate", "--trace", &s(&fixture()), "--config", &s(&config), "--out", &s(&work.path().join("o.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn baseline_t4() {
    let work = TempDir::new().unwrap();
    let table = work.path().join("baseline.csv");
    let out = dyce(&["baseline", "--trace", &s(&fixture()), "--lambda", "0.5", "--k-fixed", "1", "--grid", "1001", "--out", &s(&table)]);
    assert_ok(&out);
    assert!(stdout(&out).contains("best t = 0.8"));
    let mut reader = csv::Reader::from_path(&table).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["t", "A", "C", "f"]);
    assert_eq!(reader.records().count(), 1001);

    let out = dyce(&["baseline", "--trace", &s(&fixture()), "--lambda", "0.5", "--k-fixed", "9", "--out", &s(&table)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn standalone_t4() {
    let work = TempDir::new().unwrap();
    let table = work.path().join("standalone.csv");
    assert_ok(&dyce(&["standalone", "--trace", &s(&fixture()), "--out", &s(&table)]));
    let mut reader = csv::Reader::from_path(&table).unwrap();
    let rows: Vec<Vec<String>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect();
    assert_eq!(rows, vec![vec!["1", "1", "0.75", "0.45"], vec!["2", "1", "0.75", "1"]]);
}

#[test]
fn plot_renders_svg() {
    let work = TempDir::new().unwrap();
    let dir = work.path().join("sweep");
    assert_ok(&dyce(&["sweep", "--trace", &s(&fixture()), "--step", "0.25", "--out", &s(&dir)]));
    let svg = work.path().join("frontier.svg");
    assert_ok(&dyce(&["plot", "--frontier", &s(&dir.join("frontier.csv")), "--out", &s(&svg)]));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches("<circle").count(), 5);
}

#[test]
fn synthesize_is_deterministic_and_valid() {
    let work = TempDir::new().unwrap();
    let (a, b) = (work.path().join("a"), work.path().join("b"));
    for dir in [&a, &b] {
        assert_ok(&dyce(&["synthesize", "--seed", "3", "--samples", "40", "--candidates", "2,1", "--out", &s(dir)]));
    }
    assert_eq!(std::fs::read(a.join("trace.csv")).unwrap(), std::fs::read(b.join("trace.csv")).unwrap());
    let out = dyce(&["validate", "--trace", &s(&a)]);
    assert_ok(&out);
    assert!(stdout(&out).starts_with("ok: M=40 N=2 K=[2,1]"));

    let out = dyce(&["synthesize", "--samples", "10", "--candidates", "1,0", "--out", &s(&work.path().join("c"))]);
    assert_eq!(out.status.code(), Some(2));
}
