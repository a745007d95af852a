use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_focusqm"))
}

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn list_names_every_scenario() {
    let out = run(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["spin-half", "cube", "coupled", "measurement", "dynamics", "singlet", "chsh", "latent-epr", "pitman"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn shipped_models_verify() {
    for name in ["cube.json", "reflection.json"] {
        let out = bin().arg("verify").arg(model(name)).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out)["pass"], true);
    }
}

#[test]
fn infer_on_z5_location_model() {
    let out = bin().arg("infer").arg(model("z5_location.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(check(&r, "pitman_risk_vs_best")["measured"], 1.1);
    assert_eq!(check(&r, "pitman_risk_equals_best_exactly")["pass"], true);
    let est = r["tables"].as_array().unwrap().iter().find(|t| t["name"] == "pitman_estimator").unwrap();
    // location model: the estimate is y itself
    for (y, row) in est["rows"].as_array().unwrap().iter().enumerate() {
        assert_eq!(row[1], y.to_string());
    }

    let zero_one = bin().arg("infer").arg(model("z5_location.json")).args(["--loss", "zero-one"]).output().unwrap();
    assert_eq!(zero_one.status.code(), Some(0));
    assert_eq!(check(&json(&zero_one), "pitman_risk_vs_best")["measured"], 0.5);
}

#[test]
fn zero_tolerance_fails_with_exit_one() {
    let out = run(&["run", "dynamics", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL dynamics"));
}

#[test]
fn invalid_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_group = dir.path().join("bad.json");
    std::fs::write(&bad_group, r#"{"order": 2, "table": [[0, 1], [0, 1]], "points": 2, "action": [[0, 0], [1, 1]], "parameters": []}"#)
        .unwrap();
    let out = bin().arg("verify").arg(&bad_group).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not a group"));

    assert_eq!(run(&["run", "no-such-scenario"]).status.code(), Some(2));
    assert_eq!(bin().arg("verify").arg(dir.path().join("missing.json")).output().unwrap().status.code(), Some(2));

    let config = dir.path().join("chsh.json");
    std::fs::write(&config, r#"{"angle_a": 0}"#).unwrap();
    let out = bin().args(["run", "chsh", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["run", "all", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn chsh_config_with_spread_angles_reaches_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("chsh.json");
    // the default setting rotated by 30°
    let dir_json = |label: &str, deg: f64| {
        let r = deg.to_radians();
        serde_json::json!({"label": label, "v": [r.cos(), r.sin(), 0.0]})
    };
    let cfg = serde_json::json!({
        "a": dir_json("a", 30.0),
        "a_prime": dir_json("a'", 120.0),
        "b": dir_json("b", 165.0),
        "b_prime": dir_json("b'", 75.0),
    });
    std::fs::write(&config, cfg.to_string()).unwrap();
    let out = bin().args(["run", "chsh", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let s = check(&json(&out), "quantum_combination")["measured"].as_f64().unwrap();
    assert!((s - 2.0 * 2f64.sqrt()).abs() <= 1e-9);
}

#[test]
fn csv_output_writes_checks_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = bin().args(["run", "pitman", "--format", "csv", "--output"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let checks = std::fs::read_to_string(&path).unwrap();
    assert!(checks.starts_with("scenario,name,measured,expected,tolerance,relation,pass\n"));
    assert!(checks.lines().skip(1).all(|l| l.starts_with("pitman,") && l.ends_with(",true")));
    let tables: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("report.pitman."))
        .collect();
    assert!(!tables.is_empty());
}

#[test]
fn runtime_only_with_timing_flag() {
    let plain = run(&["run", "singlet"]);
    assert!(json(&plain).get("runtime_seconds").is_none());
    let timed = run(&["run", "singlet", "--timing"]);
    assert!(json(&timed)["runtime_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn seed_changes_random_content_but_not_verdicts() {
    let a = run(&["run", "measurement", "--seed", "1"]);
    let b = run(&["run", "measurement", "--seed", "2"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
    assert_eq!(json(&a)["seed"], 1);
}
