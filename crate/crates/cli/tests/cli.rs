use std::fs;

use assert_cmd::Command;
use serde_json::Value;

fn polyharm() -> Command {
    Command::cargo_bin("polyharm").unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = polyharm().args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn roots_by_n(report: &Value) -> Vec<(u64, Vec<f64>)> {
    report["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            let roots = s["roots"].as_array().unwrap().iter().map(|r| r["record"]["a"].as_f64().unwrap()).collect();
            (s["n"].as_u64().unwrap(), roots)
        })
        .collect()
}

#[test]
fn critical_r3_has_one_root_at_seven() {
    let report = json(&["critical", "--r", "3", "--n-min", "7", "--n-max", "12"]);
    let a3 = 0.5 * ((2.0 * 10f64.sqrt() - 11.0) / 9.0).acos();
    for (n, roots) in roots_by_n(&report) {
        if n == 7 {
            assert_eq!(roots.len(), 1);
            assert!((roots[0] - a3).abs() < 1e-8);
        } else {
            assert!(roots.is_empty(), "n = {n}");
        }
    }
    assert_eq!(report["command"], "critical");
    assert!(report["tolerances"]["reference_tol"].as_f64().is_some());
}

#[test]
fn critical_r2_roots_at_five_and_six() {
    let report = json(&["critical", "--r", "2", "--n-min", "5", "--n-max", "8"]);
    let hits: Vec<u64> = roots_by_n(&report).into_iter().filter(|(_, r)| !r.is_empty()).map(|(n, _)| n).collect();
    assert_eq!(hits, vec![5, 6]);
    let five = &roots_by_n(&report)[0].1[0];
    assert!((five - std::f64::consts::PI / 3.0).abs() < 1e-8);
}

#[test]
fn stability_named_case() {
    let report = json(&["stability", "--case", "r3-n7"]);
    let rec = &report["records"][0];
    assert!((rec["second_variation"].as_f64().unwrap() + 11.0781).abs() < 1e-4);
    assert_eq!(rec["verdict"], "unstable");
    assert!(report["parameters"]["calibration_constant"].as_f64().is_some());
}

#[test]
fn stability_exit_codes() {
    polyharm().args(["stability", "--case", "r9-n1"]).assert().code(2);
    polyharm().args(["stability", "--r", "3", "--n", "7"]).assert().code(2);
    polyharm().args(["stability", "--r", "3", "--n", "7", "--a", "1.0", "--bump", "(1-rho)^2"]).assert().code(3);
    polyharm().args(["critical", "--r", "3", "--n-min", "5", "--n-max", "9"]).assert().code(3);
    polyharm().args(["critical", "--r", "3"]).assert().code(2);
}

#[test]
fn accuracy_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.toml");
    fs::write(&cfg, "abs_tol = 0.0\nrel_tol = 0.0\nmax_level = 4\nmin_level = 3\n").unwrap();
    polyharm().args(["stability", "--case", "r3-n7", "--config", cfg.to_str().unwrap()]).assert().code(4);
}

#[test]
fn config_is_applied_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    fs::write(&cfg, "grid = 128\nreference_tol = 1e-6\n").unwrap();
    let path = cfg.to_str().unwrap();
    let report = json(&["critical", "--r", "3", "--n-min", "7", "--n-max", "7", "--config", path]);
    assert_eq!(report["tolerances"]["scan"]["grid"], 128);
    assert_eq!(report["tolerances"]["reference_tol"], 1e-6);
    let report = json(&["critical", "--r", "3", "--n-min", "7", "--n-max", "7", "--config", path, "--grid", "256"]);
    assert_eq!(report["tolerances"]["scan"]["grid"], 256);

    fs::write(&cfg, "gird = 1\n").unwrap();
    polyharm().args(["sobolev", "--r", "2", "--n", "5", "--config", path]).assert().code(2);
}

#[test]
fn reports_are_deterministic() {
    let args = ["critical", "--r", "2", "--n-min", "5", "--n-max", "6"];
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("wall_time_s");
        serde_json::to_vec(&v).unwrap()
    };
    assert_eq!(strip(json(&args)), strip(json(&args)));
}

#[test]
fn ellipsoid_window_boundary_is_outside() {
    let report = json(&["ellipsoid", "--order", "2", "--n", "7", "--b", "1", "--window"]);
    assert_eq!(report["records"]["window"]["inside"], false);
}

#[test]
fn ellipsoid_roots_inside_window() {
    let report = json(&["ellipsoid", "--order", "3", "--n", "7", "--b", "1"]);
    let roots = report["records"]["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 1);
    assert!(roots[0]["first_variation"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn warped_commands() {
    let report = json(&["warped", "--order", "2", "--n", "5", "--ode"]);
    assert!(report["records"]["ode"]["max_deviation"].as_f64().unwrap() <= 1e-8);
    assert_eq!(report["records"]["ode"]["trajectory"].as_array().unwrap().len(), 0);

    let report = json(&["warped", "--series", "--max", "1000"]);
    assert_eq!(report["records"]["all_nonzero"], true);

    let report = json(&["warped", "--order", "3", "--n", "8"]);
    assert!(report["records"]["pole_angle"].is_null());
    polyharm().args(["warped", "--order", "3", "--n", "6"]).assert().code(3);
}

#[test]
fn sobolev_and_conjecture() {
    let report = json(&["sobolev", "--r", "3", "--n", "6"]);
    assert_eq!(report["records"][0]["member"], false);
    let report = json(&["conjecture", "--r", "6", "--verify"]);
    assert_eq!(report["records"]["matches"], true);
}

#[test]
fn csv_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.csv");
    polyharm()
        .args(["sobolev", "--r", "2", "--n", "3", "--n-max", "6", "--csv", "--out", out.to_str().unwrap()])
        .assert()
        .success()
        .stdout("");
    let text = fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().collect::<Vec<_>>(), ["r,n,member", "2,3,false", "2,4,false", "2,5,true", "2,6,true"]);
}

#[test]
fn thread_cap_is_honoured() {
    polyharm().env("POLYHARM_THREADS", "1").args(["sobolev", "--r", "2", "--n", "5"]).assert().success();
    polyharm().env("POLYHARM_THREADS", "many").args(["sobolev", "--r", "2", "--n", "5"]).assert().code(2);
}
