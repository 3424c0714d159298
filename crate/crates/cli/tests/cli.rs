use std::fs;
use std::process::{Command, Output};

fn commcomplex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_commcomplex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn error_document(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().expect("stderr line")).expect("stderr is a JSON document")
}

#[test]
fn solve_reports_certified_bounds() {
    let out = commcomplex(&["solve", "--planar", "--M", "4", "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let lower = doc["D_lower"].as_f64().unwrap();
    let upper = doc["D_upper"].as_f64().unwrap();
    assert!(doc["certified"].as_bool().unwrap());
    assert!(upper - lower <= 1e-3);
    assert!(lower <= 1.127_570_660_143_532 + 1e-7 && 1.127_570_660_143_532 <= upper + 1e-7);
    assert!(doc.get("channel").is_none());
}

#[test]
fn solve_writes_document_with_channel() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("result.json");
    let out = commcomplex(&[
        "solve", "--planar", "--M", "2", "--gamma", "0.9", "--symmetry", "cyclic", "--with-channel", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("certified"));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["symmetry"], "cyclic");
    let rows = doc["channel"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].as_array().unwrap().len(), 4);
}

#[test]
fn build_game_round_trips_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let game = dir.path().join("game.json");
    let out = commcomplex(&["build-game", "--planar", "--M", "3", "--gamma", "0.95", "--out", game.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let from_file = commcomplex(&["solve", "--game", game.to_str().unwrap()]);
    let planar = commcomplex(&["solve", "--planar", "--M", "3", "--gamma", "0.95"]);
    let a: serde_json::Value = serde_json::from_str(&stdout(&from_file)).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stdout(&planar)).unwrap();
    assert_eq!(a["D_lower"], b["D_lower"]);
    assert_eq!(a["D_upper"], b["D_upper"]);
}

#[test]
fn sweep_csv_layout() {
    let out = commcomplex(&["sweep", "--M", "1,2,3", "--gamma", "1,0.95"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "M,gamma,D_lower,D_upper,analytic,gap,iterations,seconds");
    assert_eq!(lines.len(), 1 + 6 + 2);
    let keys: Vec<(String, String)> = lines[1..7]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 8);
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    let expected: Vec<(String, String)> = ["1", "2", "3"]
        .iter()
        .flat_map(|m| ["1", "0.95"].iter().map(move |g| (m.to_string(), g.to_string())))
        .collect();
    assert_eq!(keys, expected);
    for line in &lines[1..7] {
        let f: Vec<f64> = line.split(',').take(5).skip(2).map(|v| v.parse().unwrap()).collect();
        assert!(f[0] - 1e-7 <= f[2] && f[2] <= f[1] + 1e-7, "{line}");
    }
    assert!(lines[7].starts_with("limit,,1.20880"));
    assert!(lines[8].starts_with("toner_bacon,,1.27865"));
}

#[test]
fn sweep_output_is_deterministic_apart_from_timing() {
    let strip = |out: Output| -> Vec<String> {
        stdout(&out).lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    };
    let a = strip(commcomplex(&["sweep", "--M", "2,4", "--gamma", "0.95,1"]));
    let b = strip(commcomplex(&["sweep", "--M", "2,4", "--gamma", "0.95,1"]));
    assert_eq!(a, b);
}

#[test]
fn sweep_requires_gamma_values() {
    let out = commcomplex(&["sweep", "--M", "2", "--gamma"]);
    assert_eq!(out.status.code(), Some(2));
    let out = commcomplex(&["sweep", "--M", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_default_grid_passes() {
    let out = commcomplex(&["oracle"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().starts_with("as-printed-no-solution"));
    assert!(text.contains("0 failed"));
}

#[test]
fn oracle_reports_printed_variant_failure() {
    let out = commcomplex(&["oracle", "--M", "2", "--gamma", "1", "--variant", "printed"]);
    assert_eq!(out.status.code(), Some(1));
    let err = error_document(&out);
    assert_eq!(err["error"]["kind"], "check-failed");
    assert_eq!(err["error"]["check"], "lambda");
    assert_eq!(err["error"]["detail"]["detail"]["finding"], "no-solution");
}

#[test]
fn oracle_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("oracle.json");
    let out = commcomplex(&["oracle", "--M", "3", "--gamma", "0.5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r["passed"] == true));
    assert!(rows.iter().any(|r| r["check"] == "certificate" && r["M"] == 3));
}

#[test]
fn simulate_noiseless_two_measurements() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.jsonl");
    let out = commcomplex(&[
        "simulate", "--planar", "--M", "2", "--gamma", "1", "--runs", "20000", "--seed", "3", "--out",
        log.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let mean = doc["cost"]["mean_bits"].as_f64().unwrap();
    assert!((1.0..=5.885_390_081_777_927).contains(&mean), "{mean}");
    assert_eq!(doc["fit"]["passed"], true);
    assert_eq!(doc["fit"]["impossible_outcomes"], 0);
    let text = fs::read_to_string(&log).unwrap();
    assert_eq!(text.lines().count(), 20_001);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["run"], 0);
    assert!(text.lines().last().unwrap().starts_with("{\"summary\""));
}

#[test]
fn simulate_single_measurement_is_deterministic_per_state() {
    let out = commcomplex(&["simulate", "--planar", "--M", "1", "--gamma", "1", "--runs", "3000"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["channel"], "solved");
    assert_eq!(doc["fit"]["impossible_outcomes"], 0);
    assert_eq!(doc["fit"]["degrees_of_freedom"], 0);
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--planar", "--M", "3", "--gamma", "0.95", "--runs", "2000", "--seed", "17"];
    assert_eq!(stdout(&commcomplex(&args)), stdout(&commcomplex(&args)));
}

#[test]
fn invalid_inputs_exit_with_code_two() {
    for args in [
        vec!["solve", "--planar", "--M", "2", "--gamma", "1.5"],
        vec!["solve", "--planar", "--M", "0", "--gamma", "1"],
        vec!["solve", "--game", "/nonexistent/game.json"],
        vec!["solve", "--tol=-1", "--planar", "--M", "2", "--gamma", "1"],
        vec!["simulate", "--planar", "--M", "2", "--gamma", "1", "--runs", "0"],
        vec!["oracle", "--M", "1"],
    ] {
        let out = commcomplex(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_document(&out)["error"]["kind"], "validation", "{args:?}");
    }
    // usage errors use the same exit code and document
    for args in [vec!["solve", "--planar", "--M", "2"], vec!["frobnicate"]] {
        let out = commcomplex(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_document(&out)["error"]["kind"], "validation", "{args:?}");
    }
    assert_eq!(commcomplex(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_game_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"outcomes": [2], "probabilities": [[[0.5, 0.6]]]}"#).unwrap();
    let out = commcomplex(&["solve", "--game", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn uncertified_solve_exits_with_code_one() {
    let out = commcomplex(&["solve", "--planar", "--M", "5", "--gamma", "0.9", "--tol", "1e-12", "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_document(&out)["error"]["check"], "certificate");
}
