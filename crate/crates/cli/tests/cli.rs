use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn comwalk(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_comwalk"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("COMWALK_OUT")
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    let dir = TempDir::new().unwrap();
    let out = comwalk(args, dir.path());
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// JSON with the timestamp removed.
fn stable_json(path: &Path) -> Value {
    let mut v = read_json(path);
    v.as_object_mut().unwrap().remove("generated_at_unix");
    v
}

/// CSV with the named column dropped.
fn csv_without(path: &Path, column: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    let skip = headers.iter().position(|h| h == column);
    let mut rows = vec![headers.iter().map(String::from).collect::<Vec<_>>()];
    for rec in r.records() {
        let rec = rec.unwrap();
        rows.push(
            rec.iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != skip)
                .map(|(_, s)| s.to_string())
                .collect(),
        );
    }
    rows
}

#[test]
fn exit_code_matrix() {
    assert_eq!(code(&["lattice-verify", "--law", "ssrw1", "--basis", "ssrw1"]), 0);
    assert_eq!(code(&["lattice-verify", "--law", "ssrw1", "--basis", "unit"]), 1);
    assert_eq!(code(&["lattice-verify", "--law", "/definitely/missing.json"]), 2);
    assert_eq!(code(&["lattice-verify", "--rho", "2"]), 2);
    assert_eq!(code(&["lclt", "--law", "lazy2", "--n", "1e5"]), 2);
    assert_eq!(code(&["lclt", "--n", "32,8"]), 2);
    assert_eq!(code(&["clt", "--steps", "1.5"]), 2);
    assert_eq!(code(&["clt", "--runs", "10"]), 2);
    assert_eq!(code(&["no-such-command"]), 2);
}

#[test]
fn lattice_verify_reports_c_rho_and_unit_violation() {
    let dir = TempDir::new().unwrap();
    assert!(comwalk(&["lattice-verify"], dir.path()).status.success());
    let v = read_json(&dir.path().join("lattice_verify.json"));
    let c = v["result"]["minimality"]["c_rho"].as_f64().unwrap();
    assert!((c - 0.0792).abs() < 5e-4, "c_rho {c}");
    assert_eq!(v["schema_version"], 1);

    comwalk(&["lattice-verify", "--basis", "unit"], dir.path());
    let v = read_json(&dir.path().join("lattice_verify.json"));
    let grid = v["config"]["grid"].as_f64().unwrap();
    let viol = v["result"]["minimality"]["candidate_violations"].as_array().unwrap();
    assert!(viol
        .iter()
        .any(|t| (t[0].as_f64().unwrap().abs() - std::f64::consts::PI).abs() <= grid));
    assert_eq!(v["passed"], false);
}

#[test]
fn budget_overflow_names_the_state_count() {
    let dir = TempDir::new().unwrap();
    let out = comwalk(&["lclt", "--law", "lazy2", "--n", "1e5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("cells") && msg.contains("budget"), "{msg}");
}

#[test]
fn lclt_table_schema() {
    let dir = TempDir::new().unwrap();
    let out = comwalk(&["lclt", "--n", "8,32,128"], dir.path());
    assert!(out.status.success());
    let rows = csv_without(&dir.path().join("lclt.csv"), "");
    assert_eq!(rows[0], ["n", "E_n", "argmax_x", "runtime_ms"]);
    assert_eq!(rows.len(), 4);
    let e: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(e[0] > e[1] && e[1] > e[2]);
}

#[test]
fn reruns_are_identical_up_to_timestamp_and_runtime() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        assert!(comwalk(&["lclt", "--n", "8,32"], dir.path()).status.success());
        comwalk(&["recur", "--steps", "2e4", "--runs", "20"], dir.path());
    }
    assert_eq!(
        csv_without(&a.path().join("lclt.csv"), "runtime_ms"),
        csv_without(&b.path().join("lclt.csv"), "runtime_ms")
    );
    assert_eq!(stable_json(&a.path().join("lclt.json")), stable_json(&b.path().join("lclt.json")));
    let ra = std::fs::read(a.path().join("recur.csv")).unwrap();
    let rb = std::fs::read(b.path().join("recur.csv")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(stable_json(&a.path().join("recur.json")), stable_json(&b.path().join("recur.json")));
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let runs: Vec<TempDir> = ["1", "3"]
        .iter()
        .map(|w| {
            let dir = TempDir::new().unwrap();
            let args = ["--workers", w];
            comwalk(&[&["escape", "--steps", "2e4", "--runs", "16"][..], &args].concat(), dir.path());
            comwalk(&[&["diag", "--n", "8,16"][..], &args].concat(), dir.path());
            comwalk(
                &[&["slclt", "--n", "16", "--samples", "1e5", "--window", "0.5"][..], &args].concat(),
                dir.path(),
            );
            dir
        })
        .collect();
    for file in ["escape.csv", "diag.csv", "slclt.csv"] {
        let x = std::fs::read(runs[0].path().join(file)).unwrap();
        let y = std::fs::read(runs[1].path().join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
    for file in ["escape.json", "diag.json", "slclt.json"] {
        assert_eq!(stable_json(&runs[0].path().join(file)), stable_json(&runs[1].path().join(file)));
    }
}

#[test]
fn config_file_fills_missing_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": [8, 16], "A": 3.0, "delta": 0.25}"#).unwrap();
    let out = comwalk(&["diag", "--config", cfg.to_str().unwrap(), "--delta", "0.5"], dir.path());
    assert!(out.status.success());
    let v = read_json(&dir.path().join("diag.json"));
    assert_eq!(v["config"]["A"], 3.0);
    assert_eq!(v["config"]["delta"], 0.5);
    assert_eq!(v["config"]["n"], serde_json::json!([8, 16]));

    std::fs::write(&cfg, r#"{"unknown": 1}"#).unwrap();
    let out = comwalk(&["diag", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_comwalk"))
        .args(["lattice-verify"])
        .env("COMWALK_OUT", dir.path())
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(dir.path().join("lattice_verify.json").exists());
}

#[test]
fn clt_variance_ratio() {
    let dir = TempDir::new().unwrap();
    let out = comwalk(&["clt", "--law", "ssrw1", "--n", "1e4", "--runs", "1e4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v = read_json(&dir.path().join("clt.json"));
    let r = v["result"]["variance_ratio"][0].as_f64().unwrap();
    assert!((r - 1.0).abs() < 0.05, "{r}");
    assert_eq!(v["config"]["seed"], 7);
}

#[test]
fn stable_diagnostics_table() {
    let dir = TempDir::new().unwrap();
    let out = comwalk(&["diag", "--law", "stable", "--n", "64,256"], dir.path());
    assert!(out.status.success());
    let rows = csv_without(&dir.path().join("diag_stable.csv"), "");
    assert_eq!(rows[0], ["n", "J1", "J2", "J3", "J4", "J5"]);
    assert_eq!(rows.len(), 3);
}
