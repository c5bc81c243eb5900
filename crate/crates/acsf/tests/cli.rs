use std::path::Path;
use std::process::Command;

use acsf::config::ExperimentConfig;
use acsf::core::harness::Suite;
use acsf::output::{read_curve_csv, read_points_csv, read_series_csv};
use acsf::report::{run_convergence, run_experiment, run_levels, turning_defect};

fn acsf(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_acsf")).args(args).output().unwrap()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

const SMALL: &str = r#"{
    "scheme": "fdani",
    "model": {"variant": "kfold", "params": {"k": 3, "delta": 0.124}},
    "J": 32, "dt": 1e-3, "T": 0.02,
    "initial": {"shape": "circle", "radius": 1},
    "observers": {"stride": 10}
}"#;

#[test]
fn run_with_config_writes_report_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("out");
    let o = acsf(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    for key in [
        "config",
        "series",
        "errors",
        "eoc",
        "status",
        "checks",
        "wall_clock_s",
        "files",
    ] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["status"], "completed");
    assert_eq!(r["config"]["J"], 32);
    let series = read_series_csv(&out.join("series.csv")).unwrap();
    assert_eq!(series.len(), 21);
    assert!(series.windows(2).all(|w| w[1].energy <= w[0].energy));
    for s in [0, 10, 20] {
        assert_eq!(read_curve_csv(&out.join(format!("snap_{s}.csv"))).unwrap().len(), 32);
        assert!(out.join(format!("snap_{s}.svg")).exists());
    }
    assert!(!out.join("snap_5.csv").exists());
}

#[test]
fn bad_config_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"scheme": "fdani", "bogus": 1}"#).unwrap();
    let o = acsf(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = acsf(&[
        "run",
        "--preset",
        "no_such_preset",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = acsf(&["converge", "--suite", "nope", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn presets_are_listed() {
    let o = acsf(&["presets"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l == "fig9_hyperbolic"));
    for name in text.lines() {
        ExperimentConfig::for_preset(name).resolve().unwrap();
    }
}

#[test]
fn wulff_of_convex_model_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.json");
    std::fs::write(&cfg, r#"{"model": {"variant": "elliptic", "params": {"delta": 0.5}}}"#).unwrap();
    let out = dir.path().join("w");
    let o = acsf(&[
        "wulff",
        "--model",
        cfg.to_str().unwrap(),
        "--samples",
        "360",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let w = read_points_csv(&out.join("wulff.csv")).unwrap();
    assert_eq!(w.len(), 360);
    assert!(turning_defect(&w) < 1e-9);
    assert!(out.join("frank.svg").exists());
}

#[test]
fn wulff_of_nonconvex_model_fails_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.json");
    std::fs::write(
        &cfg,
        r#"{"model": {"variant": "kfold", "params": {"k": 4, "delta": 0.3}}}"#,
    )
    .unwrap();
    let out = dir.path().join("w");
    let o = acsf(&[
        "wulff",
        "--model",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL convexity"));
}

#[test]
fn forced_run_records_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_json(
        r#"{
        "scheme": "fdani",
        "model": {"variant": "elliptic", "params": {"delta": 0.5}},
        "forcing": {"delta": 0.5},
        "J": 32, "dt": 1e-3, "T": 0.05,
        "observers": {"kinds": ["series", "errors"]}
    }"#,
    )
    .unwrap();
    let r = run_experiment(&cfg, dir.path()).unwrap();
    let rows = &r.series[0].rows;
    assert_eq!(rows.len(), 51);
    let last = rows.last().unwrap();
    // bounded by the J=32 level errors of the full convergence run
    assert!(last.l2_err.unwrap() < 1.3e-2 && last.h1_err.unwrap() < 0.29, "{last:?}");
    assert!(!dir.path().join("snap_0.csv").exists());
    assert_eq!(
        read_series_csv(&dir.path().join("series.csv")).unwrap()[50].l2_err,
        last.l2_err
    );
}

#[test]
fn single_level_convergence_has_no_eoc() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_convergence(Suite::Table1, &[32], dir.path()).unwrap();
    assert!(r.eoc.l2.is_empty() && r.eoc.h1.is_empty());
    assert_eq!(r.errors.len(), 1);
    assert!(r.errors[0].eoc_l2.is_none());
    let text = std::fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",,"));
    assert!(r.passed(), "{:?}", r.checks);
}

#[test]
fn levels_must_ascend() {
    assert!(run_levels(Suite::Table1, &[64, 32]).is_err());
    assert!(run_levels(Suite::Table1, &[]).is_err());
}
