//! End-to-end tests of the binary: exit codes, reproducibility headers and
//! byte-identical reruns.

use std::path::PathBuf;
use std::process::{Command, Output};

fn gwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gwlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_spec(dir: &std::path::Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const E1: &str = r#"{
  "d": 2,
  "laws": [
    [{"k":[0,0],"p":"1/4"},{"k":[1,0],"p":"1/4"},{"k":[0,1],"p":"1/4"},{"k":[1,1],"p":"1/4"}],
    [{"k":[0,0],"p":"1/4"},{"k":[1,0],"p":"1/4"},{"k":[0,1],"p":"1/4"},{"k":[1,1],"p":"1/4"}]
  ]
}"#;

const SINGULAR: &str = r#"{"d":1,"laws":[[{"k":[1],"p":"1"}]]}"#;

const NOT_NORMALIZED: &str = r#"{"d":1,"laws":[[{"k":[0],"p":"1/2"},{"k":[2],"p":"1/3"}]]}"#;

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gwlab-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn validate_reports_checklist() {
    let dir = tempdir();
    let spec = write_spec(&dir, "e1.json", E1);
    let out = gwlab(&["validate", "--spec", spec.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("criticality: critical (certified)"));
    assert!(text.contains("aperiodic: true"));
    assert!(text.contains("non-singular: true"));
    assert!(text.contains("(H1) primitive critical non-singular: true"));
}

#[test]
fn validate_flags_singular_spec() {
    let dir = tempdir();
    let spec = write_spec(&dir, "singular.json", SINGULAR);
    let out = gwlab(&["validate", "--spec", spec.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("non-singular: false"));
}

#[test]
fn invalid_spec_exits_2_with_law_index() {
    let dir = tempdir();
    let spec = write_spec(&dir, "bad.json", NOT_NORMALIZED);
    let out = gwlab(&["validate", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("law 0"), "stderr: {err}");
}

#[test]
fn usage_errors_exit_1() {
    let out = gwlab(&["experiment", "--kind", "nonsense"]);
    assert_eq!(out.status.code(), Some(1));
    let out = gwlab(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn progeny_engines_agree_in_output() {
    let dir = tempdir();
    let spec = write_spec(&dir, "e1-progeny.json", E1);
    let out = gwlab(&["progeny", "--spec", spec.to_str().unwrap(), "-r", "1", "--cap", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().starts_with("# gwlab progeny config_hash="));
    assert!(text.contains("1 0,1/4,1/4,true"));
    for line in text.lines().skip(2) {
        assert!(line.ends_with("true"), "engines disagree: {line}");
    }
}

#[test]
fn identical_config_and_seed_are_byte_identical() {
    let dir = tempdir();
    let spec = write_spec(&dir, "e1-repro.json", E1);
    let args = [
        "experiment",
        "--kind",
        "convergence",
        "--spec",
        spec.to_str().unwrap(),
        "--cap",
        "2",
        "--n-min",
        "3",
        "--n-max",
        "6",
        "--seed",
        "11",
    ];
    let first = gwlab(&args);
    let second = gwlab(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);

    let sample_args = [
        "sample",
        "--spec",
        spec.to_str().unwrap(),
        "--kind",
        "gw",
        "--seed",
        "5",
        "--count",
        "10",
    ];
    let first = gwlab(&sample_args);
    let second = gwlab(&sample_args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn experiment_emits_summary_and_json_mirror() {
    let dir = tempdir();
    let spec = write_spec(&dir, "e1-exp.json", E1);
    let out = gwlab(&[
        "experiment",
        "--kind",
        "strongratio",
        "--dist",
        "uniform012",
        "--n-min",
        "25",
        "--n-max",
        "100",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# summary final_within_0.05=true"));

    let out = gwlab(&[
        "experiment",
        "--kind",
        "convergence",
        "--spec",
        spec.to_str().unwrap(),
        "--cap",
        "1",
        "--n-min",
        "3",
        "--n-max",
        "5",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["meta"]["config_hash"].is_string());
    assert!(!doc["rows"].as_array().unwrap().is_empty());
}

#[test]
fn conditioned_sampling_respects_census() {
    let dir = tempdir();
    let spec = write_spec(&dir, "e1-cond.json", E1);
    let out = gwlab(&[
        "sample",
        "--spec",
        spec.to_str().unwrap(),
        "--kind",
        "conditioned",
        "--root",
        "1",
        "--census",
        "2,1",
        "--seed",
        "3",
        "--count",
        "5",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    for line in text.lines() {
        let tree = gwlab::marked_tree::MarkedTree::from_json(2, line).unwrap();
        assert_eq!(tree.type_counts(), vec![2, 1]);
        assert_eq!(tree.root_mark(), 0);
    }
}

#[test]
fn gnedenko_experiment_decays() {
    let out = gwlab(&["experiment", "--kind", "gnedenko", "--dist", "uniform01", "--grid", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# summary decay_factor_1.2_per_doubling=true"));
    // per-theta rows: 4 values of n, 3 grid points
    assert_eq!(text.lines().filter(|l| !l.starts_with('#') && l.contains(',')).count(), 13);
}

#[test]
fn progeny_table_is_empty_for_singular_spec() {
    // every individual has exactly one child: no finite census is feasible
    let dir = tempdir();
    let spec = write_spec(&dir, "singular-progeny.json", SINGULAR);
    let out = gwlab(&["progeny", "--spec", spec.to_str().unwrap(), "-r", "1", "--cap", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let data_rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(data_rows, 1, "only the column header expected:\n{text}");
}

#[test]
fn progeny_monotype_binary_values() {
    let dir = tempdir();
    let spec = write_spec(
        &dir,
        "binary.json",
        r#"{"d":1,"laws":[[{"k":[0],"p":"1/2"},{"k":[2],"p":"1/2"}]]}"#,
    );
    let out = gwlab(&["progeny", "--spec", spec.to_str().unwrap(), "-r", "1", "--cap", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("3,1/8,1/8,true"), "missing P(|tau|=3) row:\n{text}");
}

#[test]
fn preset_round_trips_through_validate() {
    let dir = tempdir();
    let out = gwlab(&["preset", "--name", "asymmetric-critical"]);
    assert!(out.status.success());
    let path = dir.join("preset.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let out = gwlab(&["validate", "--spec", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("criticality: critical (certified)"));
}

#[test]
fn tiltgrid_dumps_rows() {
    let out = gwlab(&["tiltgrid", "--dist", "uniform012", "--grid", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("theta,")));
    // phi(0) = 0 row present
    assert!(text.contains("0.000000,0.000000000000,1.000000000000"));
}
