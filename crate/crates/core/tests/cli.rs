//! End-to-end runs of the `cloudq` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cloudq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cloudq"))
        .args(args)
        .env_remove("CLOUDQ_THREADS")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn estimate_first_preset() {
    let v = json(&cloudq(&["estimate", "--preset", "paper-case-1"]));
    let t = v["totals"]["t_count"].as_f64().unwrap();
    assert!((t / 4.9e14 - 1.0).abs() <= 0.15, "{t}");
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn simulate_checks_master() {
    let out = cloudq(&["simulate", "--N", "3", "--M", "5", "--check-master"]);
    let v = json(&out);
    assert_eq!(v["check_master"]["passed"], true);
    assert_eq!(code(&out), 0);
}

#[test]
fn arcsine_fit_degree_seven() {
    let v = json(&cloudq(&["arcsine-fit", "--d", "7", "--eps", "1e-13"]));
    assert_eq!(v["M"], 7);
    assert!(v["verified_error"].as_f64().unwrap() < 1e-13);
}

#[test]
fn empty_config_lists_required_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "empty.json", "");
    let out = cloudq(&["--config", &path]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("required field: command"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn unknown_key_is_rejected_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "bad.json",
        r#"{"command": "estimate", "preset": "paper-case-1", "bogus": 1}"#,
    );
    let out = cloudq(&["--config", &path]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bogus"), "{}", stderr(&out));
}

#[test]
fn config_file_with_flag_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "run.json",
        r#"{"command": "simulate", "N": 4, "M": 2, "dt": 0.005}"#,
    );
    let v = json(&cloudq(&["--config", &path, "--M", "6"]));
    assert_eq!(
        (v["N"].as_u64(), v["M"].as_u64(), v["dt"].as_f64()),
        (Some(4), Some(6), Some(0.005))
    );

    let clash = cloudq(&["estimate", "--config", &path]);
    assert_eq!(code(&clash), 2);
}

#[test]
fn exit_codes_by_error_kind() {
    assert_eq!(code(&cloudq(&[])), 2);
    assert_eq!(code(&cloudq(&["estimate", "--preset", "paper-case-9"])), 2);
    // K dt = 1 with ten droplets: the collision probabilities exceed one.
    assert_eq!(
        code(&cloudq(&["solve", "--N", "10", "--M", "1", "--dt", "1"])),
        6
    );
    assert_eq!(
        code(&cloudq(&[
            "estimate",
            "--preset",
            "paper-case-1",
            "--delta",
            "2"
        ])),
        3
    );
    assert_eq!(code(&cloudq(&["solve", "--N", "80", "--M", "1"])), 4);
    let threads = Command::new(env!("CARGO_BIN_EXE_cloudq"))
        .args(["estimate", "--preset", "paper-case-1"])
        .env("CLOUDQ_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&threads), 2);
}

#[test]
fn output_is_byte_identical() {
    let run = |args: &[&str]| {
        let out = cloudq(args);
        assert!(out.status.success(), "{}", stderr(&out));
        out.stdout
    };
    let est = ["estimate", "--preset", "paper-case-2"];
    assert_eq!(run(&est), run(&est));
    let ssa = [
        "solve",
        "--N",
        "5",
        "--M",
        "20",
        "--dt",
        "0.01",
        "--ssa-runs",
        "200",
        "--seed",
        "9",
    ];
    assert_eq!(run(&ssa), run(&ssa));
    let one = Command::new(env!("CARGO_BIN_EXE_cloudq"))
        .args(ssa)
        .env("CLOUDQ_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(one.stdout, run(&ssa));
}

#[test]
fn csv_time_series() {
    let out = cloudq(&[
        "solve", "--N", "3", "--M", "2", "--dt", "0.05", "--format", "csv",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,bin,expected_count"));
    assert_eq!(lines.next(), Some("0,1,3.0"));
    // Last row: expected count of bin 3 after two steps is 0.0075.
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(&last[..2], &["2", "3"]);
    assert!((last[2].parse::<f64>().unwrap() - 0.0075).abs() < 1e-15);

    let states = cloudq(&[
        "solve", "--N", "3", "--M", "1", "--dt", "0.05", "--format", "csv", "--series", "states",
    ]);
    assert!(String::from_utf8(states.stdout)
        .unwrap()
        .starts_with("step,state_id,probability\n"));
}

#[test]
fn coefficient_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = dir.path().join("coeffs.json");
    let report = dir.path().join("fit.json");
    let c = coeffs.to_str().unwrap();
    let fit = cloudq(&[
        "arcsine-fit",
        "--d",
        "5",
        "--eps",
        "1e-10",
        "--n-eps",
        "40",
        "--coefficients",
        c,
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(fit.status.success(), "{}", stderr(&fit));
    assert!(fit.stdout.is_empty());
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(written["M"].as_u64().unwrap() > 0);

    let v = json(&cloudq(&[
        "emulate",
        "--coefficients",
        c,
        "--widths",
        "40",
        "--samples",
        "200",
    ]));
    let text = v.to_string();
    assert!(text.contains("max_error"), "{text}");
    let csv = cloudq(&[
        "emulate",
        "--coefficients",
        c,
        "--widths",
        "40",
        "--samples",
        "200",
        "--format",
        "csv",
    ]);
    let csv = String::from_utf8(csv.stdout).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "40");
    assert!(row[2].parse::<f64>().unwrap() < 1e-9);

    let wrong = cloudq(&["emulate", "--coefficients", c, "--widths", "30"]);
    assert_eq!(code(&wrong), 2);
}
