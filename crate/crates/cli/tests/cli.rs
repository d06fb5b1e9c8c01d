use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transprod")).args(args).env_remove("PRODINT_BUDGET").output().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn scalar(v: &Value) -> f64 {
    assert_eq!(v["kind"], "scalar");
    v["data"][0].as_f64().unwrap()
}

#[test]
fn list_has_anchors() {
    let out = run(&["examples", "list"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json_of(&out)["examples"].as_array().unwrap().clone();
    let find = |n: &str| rows.iter().find(|r| r["name"] == n).unwrap().clone();
    assert!(find("ex301")["description"].as_str().unwrap().contains("(log 2)² closed form"));
    assert_eq!(find("sqrtcos")["expected"], "exp(−1)");
    let none = json_of(&run(&["examples", "list", "no-such-example"]));
    assert!(none["examples"].as_array().unwrap().is_empty());
}

#[test]
fn ex301_reports_value_and_negative_verdicts() {
    let out = run(&["examples", "run", "ex301", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(2));
    let d = json_of(&out);
    let want = std::f64::consts::LN_2.powi(2).exp();
    assert!((scalar(&d["value"]) - want).abs() < 1e-7);
    assert_eq!(d["verdicts"]["riemann"], "unbounded-witness");
    assert_eq!(d["verdicts"]["bochner"], "divergence");
}

#[test]
fn ex711_haahti_and_divergence() {
    let out = run(&["examples", "run", "ex711", "--no-timestamp", "--levels", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let d = json_of(&out);
    let data: Vec<f64> = d["haahti"]["data"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(data[0], 1.0);
    assert!(data[1..].iter().all(|&x| x == 0.0));
    assert_eq!(d["ks"]["verdict"], "divergence-witness");
    assert_eq!(d["ks"]["gap"], 1.0);
}

#[test]
fn sum_of_zero_family() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("zero.json");
    let zero = r#"{"kind":"scalar","n":1,"data":[0]}"#;
    let text = format!(r#"{{"set":{{"type":"finite","points":[0,0.5,1]}},"terms":[{{"idx":[0],"elem":{zero}}},{{"idx":[1],"elem":{zero}}},{{"idx":[2],"elem":{zero}}}]}}"#);
    std::fs::write(&p, text).unwrap();
    let out = run(&["sum", "--input", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let d = json_of(&out);
    assert_eq!(scalar(&d["value"]), 0.0);
    assert_eq!(d["truncated"], false);
    assert!(d["timestamp"].is_string());
}

#[test]
fn output_is_deterministic_without_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<_> = (0..2).map(|i| dir.path().join(format!("run{i}.json"))).collect();
    for f in &files {
        let out = run(&["examples", "run", "ex302", "--no-timestamp", "--out", f.to_str().unwrap()]);
        assert!(out.stdout.is_empty());
    }
    let (a, b) = (std::fs::read(&files[0]).unwrap(), std::fs::read(&files[1]).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert!(!String::from_utf8(a).unwrap().contains("timestamp"));
}

#[test]
fn csv_convergence_table() {
    let out = run(&["prodint", "--input", "linear", "--tol", "1e-4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["level", "m", "delta", "value_json"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    // The sweep stops at the first level whose last two deltas are below tol.
    let n = rows.len();
    assert!((3..=17).contains(&n));
    assert!(rows[n - 2..].iter().all(|r| r[2].parse::<f64>().unwrap() < 1e-4));
    assert_eq!(&rows[0][2], "");
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r[0].parse::<usize>().unwrap(), k);
        assert_eq!(r[1].parse::<usize>().unwrap(), 1 << k);
        let v: Value = serde_json::from_str(&r[3]).unwrap();
        assert!(scalar(&v) >= 1.0);
    }
    let last = scalar(&serde_json::from_str(&rows[n - 1][3]).unwrap());
    assert!((last - 0.5f64.exp()).abs() < 1e-4);
}

#[test]
fn csv_without_table_is_an_input_error() {
    let out = run(&["sum", "--input", "ex201", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn budget_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_transprod"))
        .args(["sum", "--input", "ex201", "--no-timestamp"])
        .env("PRODINT_BUDGET", "50")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let d = json_of(&out);
    assert_eq!(d["truncated"], true);
    assert!(d["terms_used"].as_u64().unwrap() <= 50);
    let flag = run(&["sum", "--input", "ex201", "--budget", "50"]);
    assert_eq!(flag.status.code(), Some(2));
}

#[test]
fn input_errors_exit_one_with_a_code() {
    for (args, code) in [
        (vec!["sum", "--input", "nonexistent"], "unknown-catalog"),
        (vec!["sum", "--input", "missing.json"], "io"),
        (vec!["sum", "--input", "{\"set\":1}"], "invalid-input"),
        (vec!["prodint", "--input", "ex201"], "input-kind"),
        (vec!["sum", "--input", "ex201", "--tol", "0"], "usage"),
        (vec!["sum", "--input", "ex201", "--levels", "0"], "usage"),
        (vec!["transport", "--path", "helix:1", "--surface", "sphere:1"], "usage"),
        (vec!["examples", "run", "ex999"], "unknown-example"),
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let line: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(line["error"], code, "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn transport_latitude_matches_oracle() {
    let out = run(&["transport", "--path", "latitude:1", "--surface", "sphere:1", "--levels", "14"]);
    let d = json_of(&out);
    assert!(d["oracle_distance"].as_f64().unwrap() < 1e-4);
    assert!(d["invariance"].as_f64().unwrap() < 1e-3);
    assert_eq!(d["matrix"]["n"], 3);
}

#[test]
fn corner_transport_is_a_product_of_projections() {
    let out = run(&["transport", "--path", "cube-corner"]);
    assert_eq!(out.status.code(), Some(0));
    let data: Vec<f64> = json_of(&out)["matrix"]["data"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    // Three orthogonal coordinate projections annihilate everything.
    assert!(data.iter().all(|x| x.abs() < 1e-15));
}

#[test]
fn gode_report_shape() {
    let out = run(&["gode", "--input", "linear", "--form", "vdef", "--levels", "10", "--tol", "1e-2"]);
    let d = json_of(&out);
    for k in ["v_conditions", "convergence", "residuals"] {
        assert!(d.get(k).is_some(), "missing {k}");
    }
    assert_eq!(d["v_conditions"]["v1"], true);
    assert_eq!(d["residuals"]["verdict"], "decaying");
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn stieltjes_modes() {
    let ks = run(&["stieltjes", "--mapping", "ex32", "--mode", "ks", "--no-timestamp"]);
    assert_eq!(ks.status.code(), Some(0));
    let d = json_of(&ks);
    assert!((scalar(&d["result"]["value"]) - 1.0).abs() < 1e-7);
    let pvar = run(&["stieltjes", "--input", "ex33", "--mode", "pvar", "--p", "1", "--levels", "16"]);
    assert_eq!(json_of(&pvar)["verdict"], "growth-witness");
    assert_eq!(pvar.status.code(), Some(2));
    let subst = run(&["stieltjes", "--input", "sqrtcos", "--mode", "subst", "--levels", "20"]);
    let d = json_of(&subst);
    assert!((scalar(&d["stieltjes"]) - (-1f64).exp()).abs() < 1e-4);
}
