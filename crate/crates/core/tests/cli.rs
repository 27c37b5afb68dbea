use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fusionlab::kfusion::KFusionReport;
use fusionlab::WeightedSubspaceSystem;
use serde_json::Value;

const LINES: &str = r#"{"ambient_dim":2,"members":[
    {"basis":{"rows":2,"cols":1,"data":[1,0]},"weight":1},
    {"basis":{"rows":2,"cols":1,"data":[0,1]},"weight":1}]}"#;
const E2: &str = r#"{"ambient_dim":2,"members":[{"basis":{"rows":2,"cols":1,"data":[0,1]},"weight":1}]}"#;
const IDENTITY: &str = r#"{"rows":2,"cols":2,"data":[1,0,0,1]}"#;
const DIAG10: &str = r#"{"rows":2,"cols":2,"data":[1,0,0,0]}"#;
const SWAP: &str = r#"{"rows":2,"cols":2,"data":[0,1,1,0]}"#;

fn fusionlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fusionlab")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn put(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (lines, e2, i, k) = (put(d, "l.json", LINES), put(d, "e2.json", E2), put(d, "i.json", IDENTITY), put(d, "k.json", DIAG10));
    let ok = fusionlab(&["verify", "--system", &lines, "--operator", &i]);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).contains("lower:    1\n"));
    let refuted = fusionlab(&["verify", "--system", &e2, "--operator", &k]);
    assert_eq!(code(&refuted), 1);
    assert!(stdout(&refuted).contains("residual:"));
    let trunc = put(d, "t.json", &LINES[..40]);
    let bad = fusionlab(&["verify", "--system", &trunc]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line"));
}

#[test]
fn exit_codes_do_not_depend_on_format() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (lines, e2, i, k) = (put(d, "l.json", LINES), put(d, "e2.json", E2), put(d, "i.json", IDENTITY), put(d, "k.json", DIAG10));
    let missing = d.join("missing.json").to_string_lossy().into_owned();
    for args in [
        vec!["verify", "--system", &lines, "--operator", &i],
        vec!["verify", "--system", &e2, "--operator", &k],
        vec!["verify", "--system", &e2],
        vec!["bounds", "--system", &lines],
        vec!["verify", "--system", &missing],
        vec!["decompose", "--system", &e2, "--operator", &k],
    ] {
        let text = fusionlab(&args);
        let mut json_args = args.clone();
        json_args.extend(["--format", "json"]);
        let json = fusionlab(&json_args);
        assert_eq!(code(&text), code(&json), "{args:?}");
    }
}

#[test]
fn missing_inputs_and_bad_flags_are_input_errors() {
    assert_eq!(code(&fusionlab(&["verify"])), 2);
    assert_eq!(code(&fusionlab(&["check-all", "--tol", "0"])), 2);
    assert_eq!(code(&fusionlab(&["check-all", "--tol", "-1"])), 2);
    assert_eq!(code(&fusionlab(&["verify", "--format", "xml"])), 2);
    assert_eq!(code(&fusionlab(&["frobnicate"])), 2);
}

#[test]
fn verify_json_has_exactly_the_declared_fields() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (lines, i) = (put(d, "l.json", LINES), put(d, "i.json", IDENTITY));
    let out = fusionlab(&["verify", "--system", &lines, "--operator", &i, "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["is_kff", "lower", "parts", "residual", "upper"]);
    assert_eq!(v["is_kff"], true);
    assert_eq!(v["lower"], 1.0);
    assert_eq!(v["upper"], 1.0);
}

#[test]
fn gen_output_feeds_back_into_verify() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("g.json").to_string_lossy().into_owned();
    let out = fusionlab(&["gen", "--flavor", "guaranteed-k-fusion-frame", "--seed", "7", "--out", &bundle]);
    assert_eq!(code(&out), 0);
    let again = fusionlab(&["gen", "--flavor", "guaranteed-k-fusion-frame", "--seed", "7"]);
    assert_eq!(stdout(&again), fs::read_to_string(&bundle).unwrap());

    let doc: Value = serde_json::from_str(&fs::read_to_string(&bundle).unwrap()).unwrap();
    let sys: WeightedSubspaceSystem = serde_json::from_value(doc["system"].clone()).unwrap();
    assert_eq!(serde_json::to_value(&sys).unwrap(), doc["system"]);

    let verified = fusionlab(&["verify", "--system", &bundle, "--operator", &bundle, "--format", "json"]);
    assert_eq!(code(&verified), 0);
    let v: Value = serde_json::from_str(&stdout(&verified)).unwrap();
    let report = KFusionReport {
        is_kff: v["is_kff"].as_bool().unwrap(),
        optimal_lower: v["lower"].as_f64().unwrap(),
        optimal_upper: v["upper"].as_f64().unwrap(),
        residual: v["residual"].as_f64().unwrap(),
        factor_t: None,
        defect_direction: None,
    };
    let direct = fusionlab::kfusion_verify(&sys, &serde_json::from_value(doc["operator"].clone()).unwrap(), 1e-9).unwrap();
    assert_eq!(report.optimal_lower, direct.optimal_lower);
    assert_eq!(report.optimal_upper, direct.optimal_upper);
}

#[test]
fn gen_rejects_bad_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = put(dir.path(), "s.json", r#"{"seed":1,"ambient_dim":3,"member_count":1,"dim_range":[1,1],"flavor":"guaranteed_fusion_frame"}"#);
    assert_eq!(code(&fusionlab(&["gen", "--spec", &spec])), 2);
    let unknown = put(dir.path(), "u.json", r#"{"seed":1,"colour":"red"}"#);
    assert_eq!(code(&fusionlab(&["gen", "--spec", &unknown])), 2);
}

#[test]
fn decompose_prints_reconstruction_residual() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (lines, f) = (put(d, "l.json", LINES), put(d, "f.json", "[3, -4]"));
    let out = fusionlab(&["decompose", "--system", &lines, "--vector", &f, "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["reconstruction_residual"].as_f64().unwrap() <= 1e-12);
    assert_eq!(v["constant_c"], 1.0);
    let e2 = put(d, "e2.json", E2);
    let k = put(d, "k.json", DIAG10);
    assert_eq!(code(&fusionlab(&["decompose", "--system", &e2, "--operator", &k, "--vector", &f])), 1);
}

#[test]
fn transform_and_perturb() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (lines, i, t) = (put(d, "l.json", LINES), put(d, "i.json", IDENTITY), put(d, "t.json", SWAP));
    let out = fusionlab(&["transform", "--system", &lines, "--operator", &i, "--operator-t", &t, "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["predicted_lower"], 1.0);
    assert_eq!(v["outcome"], "confirmed");

    let k = put(d, "k.json", DIAG10);
    let diag = fusionlab(&["transform", "--system", &lines, "--operator", &k, "--operator-t", &k]);
    assert_eq!(code(&diag), 1);

    let same = fusionlab(&["perturb", "--system", &lines, "--system-b", &lines, "--format", "json"]);
    assert_eq!(code(&same), 0);
    let v: Value = serde_json::from_str(&stdout(&same)).unwrap();
    assert_eq!(v["predicted"]["lower"], 1.0);
    assert_eq!(v["within_prediction"], true);
}

#[test]
fn local_global_needs_local_frames() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let lines = put(d, "l.json", LINES);
    assert_eq!(code(&fusionlab(&["local-global", "--system", &lines])), 2);
    let framed = put(
        d,
        "f.json",
        r#"{"ambient_dim":2,"members":[
            {"basis":{"rows":2,"cols":1,"data":[1,0]},"weight":1,"local_frame":[[1,0],[2,0]]},
            {"basis":{"rows":2,"cols":1,"data":[0,1]},"weight":2,"local_frame":[[0,1]]}]}"#,
    );
    let out = fusionlab(&["local-global", "--system", &framed, "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["outcome"], "confirmed");
}

#[test]
fn check_all_default_seed_is_clean() {
    let out = fusionlab(&["check-all", "--seed", "1", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["failures"], 0);
    assert_eq!(v["seed"], 1);
    assert_eq!(v["checks"].as_array().unwrap().len(), fusionlab::battery::check_names().len());
}
