use std::path::Path;
use std::process::{Command, Output};

fn sheetfilter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sheetfilter")).args(args).output().expect("binary runs")
}

fn default_config() -> serde_json::Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, cfg: &serde_json::Value) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn persistence_violation_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = default_config();
    cfg["hurst"]["alpha"] = 0.4.into();
    let path = write_config(tmp.path(), &cfg);
    let out = sheetfilter(&["properties", "--config", &path, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("hurst.alpha") && err.contains("persistent"), "{err}");
}

#[test]
fn unknown_field_and_bad_json_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = default_config();
    cfg["grid"]["n3"] = 4.into();
    let path = write_config(tmp.path(), &cfg);
    assert_eq!(sheetfilter(&["simulate", "--config", &path]).status.code(), Some(2));
    std::fs::write(&path, "{").unwrap();
    assert_eq!(sheetfilter(&["simulate", "--config", &path]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = sheetfilter(&["simulate", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn zero_sensor_curve_trace_is_the_prior_mean() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = default_config();
    cfg["sensor"]["g"] = serde_json::json!({"kind": "zero"});
    cfg["grid"]["n1"] = 8.into();
    cfg["grid"]["n2"] = 8.into();
    cfg["filter"]["particles"] = 400.into();
    let path = write_config(tmp.path(), &cfg);
    let out_dir = tmp.path().join("curve");
    let out = sheetfilter(&["filter-curve", "--config", &path, "--out", out_dir.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let bayes_dir = tmp.path().join("bayes");
    let out = sheetfilter(&["filter-bayes", "--config", &path, "--out", bayes_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    // with no sensor every weight is 1: the Bayes trace is the plain prior mean
    let bayes = std::fs::read_to_string(bayes_dir.join("trace_bayes_f0.csv")).unwrap();
    let prior: std::collections::HashMap<(String, String), (f64, f64)> = bayes
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            assert_eq!(c[5], "400");
            ((c[0].to_string(), c[1].to_string()), (c[3].parse().unwrap(), c[4].parse().unwrap()))
        })
        .collect();
    let curve = std::fs::read_to_string(out_dir.join("trace_curve_diagonal_f0.csv")).unwrap();
    assert!(curve.starts_with("z1,z2,sigma,pi,se,n_eff\n"));
    for l in curve.lines().skip(1) {
        let c: Vec<&str> = l.split(',').collect();
        let sigma: f64 = c[2].parse().unwrap();
        let pi: f64 = c[3].parse().unwrap();
        assert_eq!(sigma, pi, "σ(1) stays 1 along the curve");
        assert_eq!(c[5], "400");
        let (mean, se) = prior[&(c[0].to_string(), c[1].to_string())];
        assert!((pi - mean).abs() <= 5.0 * 2f64.sqrt() * se, "{l}: prior mean {mean}");
    }
}

#[test]
fn simulate_writes_documented_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("sim");
    let out = sheetfilter(&["simulate", "--seed", "9", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for stem in ["signal", "observation", "noise", "wiener", "whitened_observation", "delta"] {
        let csv = std::fs::read_to_string(out_dir.join(format!("{stem}.csv"))).unwrap();
        assert!(csv.starts_with("i,j,z1,z2,value\n"));
        assert_eq!(csv.lines().count(), 1 + 256);
        assert_eq!(&std::fs::read(out_dir.join(format!("{stem}.fbsf"))).unwrap()[..4], b"FBSF");
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seeds"]["master"], 9);
    assert_eq!(summary["subcommand"], "simulate");
}

#[test]
fn convergence_fast_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sheetfilter(&["convergence", "--check-level", "fast", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches("[PASS]").count(), 3, "{stdout}");
}

#[test]
fn dmz_check_reports_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = default_config();
    cfg["grid"]["n1"] = 8.into();
    cfg["grid"]["n2"] = 8.into();
    cfg["filter"]["particles"] = 2000.into();
    let path = write_config(tmp.path(), &cfg);
    let out = sheetfilter(&["dmz-check", "--config", &path, "--out", tmp.path().join("d").to_str().unwrap()]);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("d/summary.json")).unwrap()).unwrap();
    let ok = summary["summary"]["within_bound"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if ok { 0 } else { 1 }));
    assert!(summary["summary"]["refined_residual"].is_number());
}
