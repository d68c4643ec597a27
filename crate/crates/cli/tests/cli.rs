use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mdpde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdpde")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn schema() -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/fit-output.schema.json");
    let raw: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&raw).expect("schema compiles")
}

fn assert_valid(v: &Value) {
    let s = schema();
    let msgs: Vec<String> = match s.validate(v) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("schema violations: {msgs:?}");
}

#[test]
fn fit_json_matches_schema() {
    let o = mdpde(&["fit", "--preset", "aids", "--alpha", "0,0.5", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_valid(&v);
    let fits = v["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 2);
    let beta = fits[0]["beta"].as_array().unwrap();
    assert!((beta[1].as_f64().unwrap() - 3.0554).abs() < 5e-3);
}

#[test]
fn failed_fits_still_match_schema() {
    let o = mdpde(&["fit", "--preset", "skin", "--alpha", "0.5,1", "--format", "json"]);
    assert_eq!(code(&o), 2);
    let v = stdout_json(&o);
    assert_valid(&v);
    assert_eq!(v["fits"][1]["converged"], Value::Bool(false));
}

#[test]
fn alphas_are_reported_in_input_order() {
    let o = mdpde(&["fit", "--preset", "leukemia", "--alpha", "0.5,0,0.1", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let alphas: Vec<f64> =
        stdout_json(&o)["fits"].as_array().unwrap().iter().map(|f| f["alpha"].as_f64().unwrap()).collect();
    assert_eq!(alphas, [0.5, 0.0, 0.1]);
}

#[test]
fn output_is_deterministic_apart_from_the_timestamp() {
    let run = |extra: &[&str]| {
        let mut args = vec!["fit", "--preset", "carrots", "--alpha", "0,0.3", "--format", "json"];
        args.extend_from_slice(extra);
        let mut v = stdout_json(&mdpde(&args));
        v["manifest"]["timestamp_unix"] = Value::Null;
        v["manifest"]["command_line"] = Value::Null;
        v
    };
    let a = run(&[]);
    assert_eq!(a, run(&[]));
    assert_eq!(a, run(&["--sequential"]));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&mdpde(&["fit", "--preset", "aids", "--alpha", "-0.1"])), 1);
    assert_eq!(code(&mdpde(&["fit", "--preset", "nowhere", "--alpha", "0"])), 1);
    assert_eq!(code(&mdpde(&["frobnicate"])), 1);
    assert_eq!(code(&mdpde(&["--help"])), 0);
}

#[test]
fn divergence_exits_two() {
    let o = mdpde(&["fit", "--preset", "skin", "--alpha", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha = 1"));
}

#[test]
fn reproduction_outside_tolerance_exits_three() {
    let o = mdpde(&["reproduce", "T9"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn reproduction_prints_a_verdict() {
    let o = mdpde(&["reproduce", "T7"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("T7"), "{text}");
    assert!(matches!(code(&o), 0 | 3));
}

#[test]
fn written_outputs_carry_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.json");
    let o = mdpde(&["fit", "--preset", "aids", "--alpha", "0", "--format", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_valid(&v);
    let m: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["dataset"]["name"], "aids");
}

#[test]
fn data_file_and_formula_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "y,x\n1,0\n3,1\n2,2\n6,3\n9,4\n15,5\n").unwrap();
    let o = mdpde(&[
        "fit",
        "--data",
        path.to_str().unwrap(),
        "--formula",
        "y ~ 1 + x",
        "--family",
        "poisson",
        "--alpha",
        "0,0.5",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_valid(&stdout_json(&o));
    std::fs::write(&path, "y,x\n1,0\n3,oops\n").unwrap();
    let o = mdpde(&[
        "fit",
        "--data",
        path.to_str().unwrap(),
        "--formula",
        "y ~ 1 + x",
        "--family",
        "poisson",
        "--alpha",
        "0",
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn other_subcommands_run() {
    let o = mdpde(&["datasets"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("leukemia"));
    let o = mdpde(&["select-alpha", "--preset", "aids", "--pilot", "0.5", "--grid-step", "0.25"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = mdpde(&["influence", "--model", "poisson-case-I", "--i0", "1", "--alphas", "0,0.5", "--upper", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 1 + 2 * 21 * 2);
    let o = mdpde(&["simulate", "--family", "logistic", "--case", "I", "--n", "30", "--reps", "5", "--quiet"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("case,coef,alpha=0"));
}
