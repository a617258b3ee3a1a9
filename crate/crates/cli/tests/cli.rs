use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use liouville::catalog;

fn liouville(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_liouville"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("LIOUVILLE_THREADS", n);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_spec(dir: &Path, k: usize) -> String {
    let path = dir.join(format!("example{k}.json"));
    fs::write(&path, catalog::example(k, 257).unwrap().to_json()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn classify_reports_example2_blowup() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), 2);
    let out = dir.path().join("out");
    ok(&liouville(&["classify", "--spec", &spec, "--out", out.to_str().unwrap()], None));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("classify.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "FiniteBlowup");
    let t = report["t_star"].as_f64().unwrap();
    assert!((t - 0.5 * (33f64.sqrt() - 1.0)).abs() < 1e-9);
    assert_eq!(report["blowup_locations"][0].as_f64(), Some(0.5));
}

#[test]
fn solve_at_initial_time_returns_initial_data() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let s = liouville::ProblemSpec::new(
        liouville::FunctionDescriptor::polynomial([1.0, -2.0]),
        liouville::FunctionDescriptor::polynomial([1.0, 0.5, -0.5]),
        liouville::FunctionDescriptor::polynomial([1.0, 2.0]),
        33,
    )
    .unwrap();
    fs::write(&spec, s.to_json()).unwrap();
    let out = dir.path().join("out");
    ok(&liouville(
        &["solve", "--spec", spec.to_str().unwrap(), "--n-t", "1", "--out", out.to_str().unwrap()],
        None,
    ));
    let csv = fs::read_to_string(out.join("field.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 33);
    for row in rows {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[1], 0.0);
        assert!((cols[2] - s.u0.value(cols[0])).abs() < 1e-14);
    }
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(threads);
        let o = out.to_str().unwrap();
        ok(&liouville(&["solve", "--example", "2", "--n-t", "64", "--out", o], Some(threads)));
        ok(&liouville(&["lp-scan", "--example", "2", "--n-t", "32", "--p", "1,2,inf", "--out", o], Some(threads)));
        files.push([
            fs::read(out.join("field.csv")).unwrap(),
            fs::read(out.join("lp_scan.csv")).unwrap(),
        ]);
    }
    assert!(files[0] == files[1]);
}

#[test]
fn reproduce_examples_reports_example4_blowup_time() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let stdout = ok(&liouville(&["reproduce-examples", "--n-t", "11", "--out", out.to_str().unwrap()], None));
    assert!(stdout.contains("example 4: FiniteBlowup t* = 0.888888888888888"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("example4_report.json")).unwrap()).unwrap();
    assert!((report["t_star"].as_f64().unwrap() - 8.0 / 9.0).abs() < 1e-12);
    let profile = fs::read_to_string(out.join("example4_final_profile.csv")).unwrap();
    for row in profile.lines().skip(2) {
        let (a, v) = row.split_once(',').unwrap();
        let (a, v): (f64, f64) = (a.parse().unwrap(), v.parse().unwrap());
        let expected = (9.0 / (1.0 - 4.0 * a + 4.0 * a * a)).powi(2);
        assert!((v - expected).abs() <= 1e-9 * expected);
    }
}

#[test]
fn invalid_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"f\": 3}").unwrap();
    let out = liouville(&["classify", "--spec", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("parsing"));

    let out = liouville(&["solve", "--example", "1", "--n-alpha", "2", "--out", dir.path().to_str().unwrap()], None);
    assert!(!out.status.success());
    let out = liouville(&["simulate", "--example", "3", "--t-max", "1.5", "--out", dir.path().to_str().unwrap()], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("t_b"));
}

#[test]
fn simulate_writes_trajectory_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let stdout = ok(&liouville(
        &["simulate", "--example", "2", "--power", "2", "--t-max", "2", "--dt", "0.002", "--n-alpha", "129", "--out", out.to_str().unwrap()],
        None,
    ));
    assert!(stdout.contains("cap 100000000 reached"), "{stdout}");
    let bounds: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("bounds.json")).unwrap()).unwrap();
    assert_eq!(bounds["violations"].as_array().unwrap().len(), 0);
    assert!(out.join("trajectory.csv").exists());
}
