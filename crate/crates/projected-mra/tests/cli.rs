//! End-to-end checks of the `pmra` binary: flag handling, presets, exit
//! codes, and the CSV files the subcommands exchange.

use std::path::PathBuf;
use std::process::{Command, Output};

use projected_mra::bench::{parse_records, records_to_csv, Method, TrialRecord, SUMMARY_HEADER};

fn pmra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmra"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("pmra-cli-{}-{name}.csv", std::process::id()))
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn synthetic_record(sigma: f64, trial_index: usize, error: f64) -> TrialRecord {
    TrialRecord {
        sigma,
        trial_index,
        method: Method::FitT,
        orbit_error: error,
        runtime_seconds: 0.1,
        iterations: 5,
        objective: 1e-8,
        d_err_t3: 0.1,
        d_err_m3: 0.2,
    }
}

fn write_synthetic_records(name: &str) -> PathBuf {
    let mut records = Vec::new();
    for sigma in [0.1, 0.2, 0.4, 0.8] {
        for t in 0..3 {
            records.push(synthetic_record(sigma, t, sigma * sigma * sigma));
        }
    }
    let path = temp_path(name);
    std::fs::write(&path, records_to_csv(&records)).unwrap();
    path
}

#[test]
fn run_writes_a_complete_record_file() {
    let out = temp_path("run");
    let output = pmra(&[
        "run",
        "--p",
        "7",
        "--n",
        "40",
        "--sigma-min",
        "0.1",
        "--sigma-max",
        "0.3",
        "--sigma-count",
        "2",
        "--trials",
        "1",
        "--methods",
        "algorithm1,fit_T",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let records = parse_records(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(records.len(), 4);
    assert!(records.iter().any(|r| r.method == Method::Algorithm1));
    assert!(records.iter().any(|r| r.method == Method::FitT));
}

#[test]
fn preset_fields_yield_to_explicit_flags() {
    let out = temp_path("preset");
    let output = pmra(&[
        "run",
        "--preset",
        "desk",
        "--sigma-min",
        "0.5",
        "--sigma-count",
        "1",
        "--trials",
        "1",
        "--methods",
        "algorithm1",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let records = parse_records(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].method, Method::Algorithm1);
    assert!((records[0].sigma - 0.5).abs() < 1e-15);
}

#[test]
fn invalid_experiment_parameters_exit_with_one() {
    let out = temp_path("bad-p");
    let output = pmra(&["run", "--p", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&output), 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("odd"));

    let output = pmra(&[
        "run",
        "--sigma-min",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 1);

    let output = pmra(&[
        "run",
        "--methods",
        "nope",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 1);
}

#[test]
fn unknown_flags_and_missing_subcommands_exit_with_one() {
    assert_eq!(code(&pmra(&[])), 1);
    assert_eq!(code(&pmra(&["run", "--bogus"])), 1);
    assert_eq!(code(&pmra(&["--help"])), 0);
}

#[test]
fn unwritable_output_exits_with_two() {
    let output = pmra(&[
        "run",
        "--p",
        "7",
        "--n",
        "40",
        "--trials",
        "1",
        "--methods",
        "algorithm1",
        "--out",
        "/nonexistent-directory-for-sure/out.csv",
    ]);
    assert_eq!(code(&output), 2);
}

#[test]
fn slope_prints_the_fitted_exponent() {
    let records = write_synthetic_records("slope-input");
    let output = pmra(&[
        "slope",
        "--in",
        records.to_str().unwrap(),
        "--method",
        "fit_T",
        "--sigma-lo",
        "0.05",
        "--sigma-hi",
        "1.0",
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let printed: f64 = String::from_utf8_lossy(&output.stdout).trim().parse().unwrap();
    assert!((printed - 6.0).abs() < 1e-9, "slope {printed}");
}

#[test]
fn slope_without_matching_records_exits_with_one() {
    let records = write_synthetic_records("slope-empty");
    let output = pmra(&[
        "slope",
        "--in",
        records.to_str().unwrap(),
        "--method",
        "em",
        "--sigma-lo",
        "0.05",
        "--sigma-hi",
        "1.0",
    ]);
    assert_eq!(code(&output), 1);
}

#[test]
fn slope_on_a_missing_file_exits_with_two() {
    let output = pmra(&[
        "slope",
        "--in",
        "/nonexistent-directory-for-sure/in.csv",
        "--method",
        "fit_T",
        "--sigma-lo",
        "0.05",
        "--sigma-hi",
        "1.0",
    ]);
    assert_eq!(code(&output), 2);
}

#[test]
fn summarize_writes_a_summary_table() {
    let records = write_synthetic_records("summary-input");
    let out = temp_path("summary-output");
    let output = pmra(&[
        "summarize",
        "--in",
        records.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SUMMARY_HEADER));
    assert_eq!(lines.count(), 4);
}

#[test]
fn summarize_rejects_a_malformed_record_file() {
    let path = temp_path("summary-bad");
    std::fs::write(&path, "not,a,record,file\n").unwrap();
    let output = pmra(&[
        "summarize",
        "--in",
        path.to_str().unwrap(),
        "--out",
        temp_path("summary-bad-out").to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 2);
}
