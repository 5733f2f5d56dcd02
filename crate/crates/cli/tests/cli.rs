use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fleet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fleet")).args(args).output().expect("binary runs")
}

fn instance(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes()).records().map(|r| r.unwrap()).collect()
}

#[test]
fn analyze_two_node() {
    let p = instance("two_node.json");
    let out = fleet(&["--input", p.to_str().unwrap(), "analyze"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let a = v["availabilities"].as_array().unwrap();
    assert!((a[0].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["obj_m"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn analyze_csv_rows_per_node() {
    let p = instance("three_node_levers.json");
    let out = fleet(&["--input", p.to_str().unwrap(), "--format", "csv", "analyze", "--quantile", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv_rows(&String::from_utf8(out.stdout).unwrap()).len(), 3);
}

#[test]
fn negative_rate_reports_pointer_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    let text = std::fs::read_to_string(instance("two_node.json")).unwrap().replacen("\"rate\": 1.0", "\"rate\": -1.0", 1);
    std::fs::write(&p, text).unwrap();
    let out = fleet(&["--input", p.to_str().unwrap(), "analyze"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/demand/0/rate"), "{err}");
}

#[test]
fn missing_input_exits_2() {
    assert_eq!(fleet(&["solve"]).status.code(), Some(2));
    assert_eq!(fleet(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn solve_then_extract_from_saved_relaxation() {
    let dir = tempfile::tempdir().unwrap();
    let p = instance("two_node.json");
    let rel = dir.path().join("rel.json");
    let out = fleet(&["--input", p.to_str().unwrap(), "--output", rel.to_str().unwrap(), "solve", "--variant", "efr"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let pol = dir.path().join("pol.json");
    let out = fleet(&[
        "--input",
        p.to_str().unwrap(),
        "--output",
        pol.to_str().unwrap(),
        "extract-policy",
        "--relaxation",
        rel.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = fleet(&["--input", p.to_str().unwrap(), "analyze", "--policy", pol.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    // Throughput: serve everyone (elevated value 2), a circulation, so
    // obj_m = 2 * m / (m + n - 1) = 1.
    let obj = json(&out)["obj_m"].as_f64().unwrap();
    assert!((obj - 1.0).abs() < 1e-9, "{obj}");
}

#[test]
fn nonconcavity_experiment_rows() {
    let out = fleet(&["experiment", "nonconcavity"]);
    let rows = csv_rows(&String::from_utf8(out.stdout.clone()).unwrap());
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(&r[11], "true", "closed forms must match");
    }
    // eps = 0.1 and 0.01 are strictly non-concave.
    assert_eq!(&rows[1][12], "true");
    assert_eq!(&rows[2][12], "true");
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn tightness_ratio_decreases() {
    let out = fleet(&["experiment", "tightness", "--n", "3", "--m", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    let ratios: Vec<f64> = rows.iter().map(|r| r[6].parse().unwrap()).collect();
    assert_eq!(ratios.len(), 4);
    assert!(ratios.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{ratios:?}");
    let gamma: f64 = rows[0][7].parse().unwrap();
    assert!((gamma - 0.5).abs() < 1e-15);
    assert!(ratios.iter().all(|&r| r >= gamma - 1e-12));
}

#[test]
fn certificate_batch_passes_and_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("batch.csv");
    let out = fleet(&["--output", csv_path.to_str().unwrap(), "experiment", "certificate-batch", "--count", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&std::fs::read_to_string(&csv_path).unwrap());
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|r| &r[11] == "true"));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(csv_path.with_extension("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], Value::Bool(true));
    assert_eq!(summary["rows"], 40);
}

#[test]
fn verify_ring_certificate() {
    let out = fleet(&["verify", "--check", "certificate", "--ring", "600", "--m", "10000", "--variant", "point"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let r = v["details"]["approximation_ratio"].as_f64().unwrap();
    assert!((r - 1.0599).abs() < 1e-4, "{r}");
}

#[test]
fn verify_exit_codes() {
    let out = fleet(&["verify", "--check", "biregular"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], Value::Bool(true));
    // A negative epsilon is rejected as input, not reported as a failed check.
    let out = fleet(&["verify", "--check", "nonconcavity", "--eps=-1"]);
    assert_eq!(out.status.code(), Some(2));
}

fn delay_instance(tau: f64) -> String {
    let mut demand = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                demand.push(format!(
                    r#"{{"from": {i}, "to": {j}, "rate": 1.0, "dist": {{"family": "uniform", "params": {{"a": 0.0, "b": 1.0}}}}}}"#
                ));
            }
        }
    }
    let row = |i: usize| format!("[{}]", (0..3).map(|j| if i == j { "0.0".to_string() } else { tau.to_string() }).collect::<Vec<_>>().join(", "));
    format!(
        r#"{{"n": 3, "m": 100, "objective": "throughput", "demand": [{}], "travel_time": [{}, {}, {}]}}"#,
        demand.join(", "),
        row(0),
        row(1),
        row(2)
    )
}

#[test]
fn verify_failed_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let pol = dir.path().join("all.json");
    let ok = dir.path().join("short.json");
    std::fs::write(&ok, delay_instance(5.0)).unwrap();
    let out = fleet(&["--input", ok.to_str().unwrap(), "verify", "--check", "delay-bound"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    // Every customer served with travel time 40 keeps about 240 units in
    // transit, more than the fleet.
    let long = dir.path().join("long.json");
    std::fs::write(&long, delay_instance(40.0)).unwrap();
    std::fs::write(&pol, r#"{"q": [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]]}"#).unwrap();
    let out = fleet(&["--input", long.to_str().unwrap(), "verify", "--check", "delay-bound", "--policy", pol.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["passed"], Value::Bool(false));

    let two = instance("two_node.json");
    let out = fleet(&["--input", two.to_str().unwrap(), "verify", "--check", "bicriteria"]);
    assert_eq!(out.status.code(), Some(2), "no secondary objective is an input error");
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let p = instance("two_node.json");
    let run = |seed: &str| fleet(&["--input", p.to_str().unwrap(), "--seed", seed, "simulate", "--horizon", "2000", "--reps", "4"]).stdout;
    assert_eq!(run("7"), run("7"));
    assert_ne!(run("7"), run("8"));
}
