use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn kptoda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kptoda"))
        .args(args)
        .env_remove("KPTODA_PRECISION")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("kptoda-{}-{name}", std::process::id()))
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn divisor_of_running_example() {
    let v = json_of(&kptoda(&["divisor", "--kappa", "0,1,2", "--a", "2,1,1", "--k", "1"]));
    assert!((floats(&v["gamma"])[0] - 0.75).abs() < 1e-14);
    assert!((floats(&v["delta"])[0] - 12.0 / 11.0).abs() < 1e-14);
    assert_eq!(v["generic"], Value::Bool(true));
    assert_eq!(v["ovals"], serde_json::json!([1, 2]));
}

#[test]
fn invert_recovers_weights() {
    let v = json_of(&kptoda(&[
        "invert",
        "--kappa",
        "0,1,2",
        "--k",
        "1",
        "--gamma",
        "0.75",
        "--delta",
        "1.090909090909091",
    ]));
    let a = floats(&v["data"]["a"]);
    for (x, y) in a.iter().zip([0.5, 0.25, 0.25]) {
        assert!((x - y).abs() < 1e-12, "{a:?}");
    }
}

#[test]
fn one_soliton_field_peaks_at_two() {
    let out = kptoda(&[
        "field",
        "--kappa",
        "-1,1",
        "--a",
        "1,1",
        "--k",
        "1",
        "--grid",
        "x=-5:5:101,y=0:0:1,t=0:0:1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,t,u"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 101);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]), "x runs fastest");
    let peak = rows.iter().map(|r| r[3]).fold(f64::MIN, f64::max);
    assert!((peak - 2.0).abs() < 1e-9, "{peak}");
}

#[test]
fn routes_agree_on_toda_entries() {
    let base = ["--kappa", "-1,0.2,1.1", "--a", "0.3,0.5,0.2", "--t", "0.4,-0.2"];
    let get = |route: &str| {
        let mut args = vec!["toda"];
        args.extend(base);
        args.extend(["--route", route]);
        let v = json_of(&kptoda(&args));
        let mut entries = floats(&v["a"]);
        entries.extend(floats(&v["b"]));
        entries
    };
    let tau = get("tau");
    for (route, tol) in [("bruhat", 1e-9), ("divisor", 1e-6)] {
        for (x, y) in get(route).iter().zip(&tau) {
            assert!((x - y).abs() < tol, "{route}: {x} vs {y}");
        }
    }
}

#[test]
fn input_document_and_output_file() {
    let input = scratch("doc.json");
    let output = scratch("dual.json");
    std::fs::write(&input, r#"{"kappa": [0, 1, 2], "a": [2, 1, 1], "k": 1}"#).unwrap();
    let out = kptoda(&[
        "dual",
        "--input",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    let ahat = floats(&v["dual"]["a"]);
    for (x, y) in ahat.iter().zip([1.0 / 11.0, 8.0 / 11.0, 2.0 / 11.0]) {
        assert!((x - y).abs() < 1e-13);
    }
    assert!(v["printed_product_law_spread"].as_f64().unwrap() > 1e-3);
    let _ = std::fs::remove_file(input);
    let _ = std::fs::remove_file(output);
}

#[test]
fn malformed_document_names_line_and_field() {
    let input = scratch("bad.json");
    std::fs::write(&input, "{\n  \"kappa\": [0, 1],\n  \"weights\": [1, 1]\n}").unwrap();
    let out = kptoda(&["validate", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("weights") && err.contains("line 3"), "{err}");
    let _ = std::fs::remove_file(input);
}

#[test]
fn exit_codes() {
    assert_eq!(kptoda(&["--help"]).status.code(), Some(0));
    assert_eq!(kptoda(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(kptoda(&["divisor", "--kappa", "0,1"]).status.code(), Some(3));
    assert_eq!(
        kptoda(&["field", "--kappa", "0,1", "--a", "1,1", "--k", "1"])
            .status
            .code(),
        Some(3)
    );
    // domain errors
    assert_eq!(
        kptoda(&["validate", "--kappa", "0,1", "--a", "1,-1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        kptoda(&["divisor", "--kappa", "0,1,2", "--a", "1,1,1", "--k", "3"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        kptoda(&["invert", "--kappa", "0,1,2", "--k", "1", "--gamma", "0.5", "--delta", "0.7"])
            .status
            .code(),
        Some(1)
    );
    // a tolerance nothing can meet
    let out = kptoda(&["verify", "--trials", "1", "--n-max", "3", "--tol-identity", "1e-300"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], Value::Bool(false));
}

#[test]
fn verify_is_deterministic() {
    let run = || {
        let mut v = json_of(&kptoda(&["verify", "--seed", "5", "--trials", "4", "--n-max", "5"]));
        v.as_object_mut().unwrap().remove("runtime_seconds");
        v
    };
    let first = run();
    assert_eq!(first, run());
    assert_eq!(first["seed"], 5);
    assert!(first["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"] == Value::Bool(true)));
}

#[test]
fn verify_on_fixed_worked_instance() {
    let v = json_of(&kptoda(&[
        "verify",
        "--trials",
        "1",
        "--kappa",
        "0,1,2",
        "--a",
        "0.5,0.25,0.25",
    ]));
    let worked = v["worked_instance"].as_array().unwrap();
    assert!(worked.iter().all(|w| w["relative_error"].as_f64().unwrap() < 1e-12));
    let printed = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "printed_product_law_expected_fail");
    assert_eq!(printed.unwrap()["pass"], Value::Bool(true));
}

#[test]
fn precision_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_kptoda"))
        .args(["verify", "--trials", "1", "--n-max", "3"])
        .env("KPTODA_PRECISION", "extended-test")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["environment"]["precision"], "extended-test");
    let bad = Command::new(env!("CARGO_BIN_EXE_kptoda"))
        .args(["verify", "--trials", "1"])
        .env("KPTODA_PRECISION", "quad")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(3));
}
