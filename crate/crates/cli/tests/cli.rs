use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwidths"))
        .args(args)
        .env_remove("WIDTHS_THREADS")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn threshold_at_half() {
    let v = json(&["threshold", "--q", "0.5", "--kind", "nqstar"]);
    assert_eq!(v["schema"], "1");
    assert_eq!(v["q"], 0.5);
    assert_eq!(v["kind"], "nq_star");
    assert_eq!(v["n"], 963);
    let v = json(&["threshold", "--q", "0.5", "--kind", "nq"]);
    assert_eq!(v["n"], 969);
}

#[test]
fn theta_trivial_root() {
    let v = json(&["theta", "--q", "0.3", "--beta", "0", "--n", "7"]);
    assert_eq!(v["theta"], 0.5);
}

#[test]
fn cvd_check_opposite_signs() {
    let v = json(&["cvd-check", "--q", "0.21", "--beta", "0"]);
    let first = v["first"]["value"].as_f64().unwrap();
    let second = v["second"]["value"].as_f64().unwrap();
    assert!(first < 0.0 && second > 0.0);
    assert_eq!(v["not_cvd"], true);
}

#[test]
fn width_sweep_cardinality_and_order() {
    let out = run(&[
        "sweep",
        "width",
        "--grid-q",
        "0.1:0.9:0.1",
        "--grid-beta",
        "0,1",
        "--grid-n",
        "1:16",
        "--output",
        "csv",
        "--threads",
        "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().clone();
    assert_eq!(&header[0], "q");
    assert_eq!(&header[header.len() - 1], "error");
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 288);
    assert_eq!(&rows[0][0], "0.1");
    assert_eq!(&rows[0][2], "1");
    assert_eq!(&rows[16][1], "1.0");
    assert_eq!(&rows[287][0], "0.9");
}

#[test]
fn sweep_output_is_deterministic_across_thread_counts() {
    let args = [
        "sweep",
        "theta",
        "--grid-q",
        "0.2:0.6:0.2",
        "--grid-beta",
        "0.3,1.4",
        "--grid-n",
        "1:6",
    ];
    let one = run(&[&args[..], &["--threads", "1"]].concat());
    let four = run(&[&args[..], &["--threads", "4"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn threads_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_pwidths"))
        .args(["sweep", "theta", "--grid-q", "0.3", "--grid-n", "1:3"])
        .env("WIDTHS_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_pwidths"))
        .args(["sweep", "theta", "--grid-q", "0.3"])
        .env("WIDTHS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn threshold_sweep_strict_above_crossover_point() {
    let v = json(&["sweep", "threshold", "--grid-q", "0.4925:0.6:0.0125"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r["strict"] == true));
}

#[test]
fn gamma_sweep_marks_unsupported_rows() {
    let v = json(&["sweep", "gamma", "--grid-q", "0.1", "--grid-n", "10,300"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["status"], "ok");
    assert_eq!(rows[1]["status"], "range_unsupported");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["theta", "--q", "1.5", "--n", "3"],
        vec!["theta", "--q", "0.5", "--n", "0"],
        vec!["theta", "--q", "0.5"],
        vec!["width", "--q", "0.5", "--n", "3", "--tol", "-1"],
        vec!["sweep", "width", "--grid-q", "0.5:0.1:0.1"],
        vec!["sweep", "width", "--grid-q", "0.5:1.5:0.5"],
        vec!["gamma-report", "--q", "0.1", "--n", "3", "--k", "7"],
        vec!["bogus"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "args {args:?}");
    }
}

#[test]
fn computation_failure_exits_one() {
    // Outside the certified arithmetic envelope.
    let out = run(&["gamma-report", "--q", "0.1", "--n", "300"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("envelope"));
}

#[test]
fn csv_and_text_outputs() {
    let out = run(&["width", "--q", "0.15", "--n", "1", "--output", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("q,beta,n,value"));
    assert_eq!(lines.count(), 1);
    let out = run(&[
        "verify-cy2n",
        "--q",
        "0.15",
        "--beta",
        "0.7",
        "--n",
        "6",
        "--output",
        "text",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text
        .lines()
        .any(|l| l.starts_with("conforms") && l.ends_with("true")));
}

#[test]
fn reproduce_suite_reports_every_item() {
    let out = run(&["reproduce-paper"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 18);
    assert!(rows
        .iter()
        .all(|r| r["result"] == "PASS" || r["result"] == "FAIL"));
    let all_pass = v["all_pass"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if all_pass { 0 } else { 1 }));
    let first = |id: &str| rows.iter().find(|r| r["id"] == id).unwrap()["result"].clone();
    assert_eq!(first("n_q(0.5)"), "PASS");
    assert_eq!(first("n_q*(0.5)"), "PASS");
    assert_eq!(first("D3 first (beta=0)"), "PASS");
}
