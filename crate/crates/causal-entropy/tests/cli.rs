//! Black-box tests of the command-line binary: exit codes, output formats,
//! and determinism, driven through std::process.

use std::io::Write;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causal-entropy"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn temp_scenario(name: &str, body: &str) -> std::path::PathBuf {
    let path = std::env::temp_dir().join(format!("causal-entropy-cli-{name}.json"));
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(body.as_bytes()).unwrap();
    path
}

#[test]
fn list_examples_names_every_fixture() {
    let out = run(&["list-examples"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "device",
        "pearl-puzzle",
        "chain-3",
        "parity",
        "sun-lauderdale-grid",
        "appendix-timeseries",
        "igci-square",
    ] {
        assert!(text.contains(name), "missing fixture {name} in:\n{text}");
    }
}

#[test]
fn successful_run_exits_zero_with_exact_fractions() {
    let out = run(&["run", "device"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("1/6") && text.contains("1/3"), "table missing fractions:\n{text}");
}

#[test]
fn infeasible_run_exits_two() {
    let out = run(&["run", "parity"]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("infeasible at step 2"), "missing status in:\n{text}");
}

#[test]
fn validation_failure_exits_three() {
    let path = temp_scenario(
        "empty-relation",
        r#"{
            "version": 1,
            "domain": {"variables": [
                {"name": "X", "values": ["0", "1"]},
                {"name": "Y", "values": ["0", "1"]}
            ]},
            "relation": [],
            "task": {"name": "pir", "cause": "X"}
        }"#,
    );
    let out = run(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error["), "stderr lacks an error code:\n{err}");
}

#[test]
fn size_cap_exits_four() {
    let path = temp_scenario(
        "census-cap",
        r#"{
            "version": 1,
            "domain": {"variables": [
                {"name": "X", "values": ["1", "2", "3"]},
                {"name": "Y", "values": ["1", "2", "3"]}
            ]},
            "relation": [["1","2"],["1","3"],["2","1"],["3","1"]],
            "task": {"name": "census", "cause": "X", "n": 100000}
        }"#,
    );
    let out = run(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let a = run(&["run", "sun-lauderdale-grid", "--format", "json"]);
    let b = run(&["run", "sun-lauderdale-grid", "--format", "json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let parsed: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(parsed["task"], "causal-maxent");
}

#[test]
fn csv_output_has_a_row_per_domain_point() {
    let out = run(&["run", "device", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    // header plus the nine cells of the 3 x 3 domain
    assert_eq!(text.trim_end().lines().count(), 10, "unexpected csv:\n{text}");
}

#[test]
fn task_and_cause_overrides_apply() {
    let out = run(&["run", "device", "--task", "symmetric-pir", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["task"], "symmetric-pir");
}
