use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use holoq::cli::{execute, parse_config, JobConfig};
use serde_json::Value;

fn holoq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holoq")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

const EP_SCAN: &str = r#"{
  "model": {"name": "dirac", "s": 1.0},
  "task": "ep-scan",
  "geometry": {"grid": {"axes": [0, 1], "ranges": [[-2, 2], [-2, 2]], "counts": [41, 41]}},
  "numerics": {"cluster_tol": 1e-2, "rank_tol": 1e-6},
  "output": {"name": "scan", "plot": {"kind": "heatmap", "columns": ["x", "y", "diagonalizable"]}}
}"#;

#[test]
fn ep_scan_writes_all_artifacts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "scan.json", EP_SCAN);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out1 = holoq(&["run", &cfg, "--jobs", "1", "--out", a.to_str().unwrap()]);
    let out4 = holoq(&["run", &cfg, "--jobs", "4", "--out", b.to_str().unwrap()]);
    assert!(out1.status.success(), "{}", String::from_utf8_lossy(&out1.stderr));
    assert!(out4.status.success());
    for f in ["scan.csv", "scan.json", "scan.dat"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs across --jobs");
    }
    let doc = read_json(&a.join("scan.json"));
    for key in ["config", "result", "diagnostics", "version"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    // Spacing 0.1 hits the unit ring at the axes and at (+-0.6, +-0.8), (+-0.8, +-0.6).
    assert_eq!(doc["result"]["non_diagonalizable"], 12);
    let csv = fs::read_to_string(a.join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 41 * 41 + 1);
    assert!(csv.starts_with("i,j,x,y,z,diagonalizable,"));
    assert!(String::from_utf8_lossy(&out1.stderr).contains("wall_time_s"));
}

#[test]
fn config_round_trips_through_the_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "scan.json", EP_SCAN);
    let out = dir.path().join("o");
    assert!(holoq(&["run", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let doc = read_json(&out.join("scan.json"));
    let echoed: JobConfig = serde_json::from_value(doc["config"].clone()).unwrap();
    assert_eq!(echoed, parse_config(EP_SCAN).unwrap());
}

#[test]
fn holonomy_task_reports_imaginary_dirac_phase() {
    let cfg = parse_config(
        r#"{"model": {"name": "dirac", "s": 1.0}, "task": "holonomy",
            "geometry": {"loop": {"circle": {"center": [2, 0, 0], "radius": 0.5, "vertices": 400}}},
            "numerics": {"gauge_trials": 4}, "seed": 3}"#,
    )
    .unwrap();
    let out = execute(&cfg, 1).unwrap();
    let r = &out.result;
    assert!(r["beta_re"].as_f64().unwrap().abs() < 1e-6);
    assert!((r["beta_im"].as_f64().unwrap() + 0.0889).abs() < 1e-3);
    assert!(r["gauge_checksum"].as_f64().unwrap() < 1e-10);
}

#[test]
fn grid_curvature_marks_failing_points() {
    let cfg = parse_config(
        r#"{"model": {"name": "dirac", "s": 1.0}, "task": "curvature",
            "geometry": {"points": [[2, 0, 0], [1, 0, 0]]}, "numerics": {"step": 1e-3}}"#,
    )
    .unwrap();
    let out = execute(&cfg, 2).unwrap();
    let mut buf = Vec::new();
    out.table.unwrap().write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert!(rows[0].ends_with(",error"));
    assert!(rows[1].ends_with(','), "{}", rows[1]);
    assert!(rows[2].contains("NaN") && !rows[2].ends_with(','), "{}", rows[2]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let bad = write(dir.path(), "bad.json", r#"{"model": {"name": "dirac", "s": 1.0}, "task": "flux", "extra": 1}"#);
    let o = holoq(&["run", &bad, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    let diag: Value = serde_json::from_slice(o.stderr.split(|b| *b == b'\n').next().unwrap()).unwrap();
    assert_eq!(diag["kind"], "Validation");
    assert!(diag["message"].as_str().unwrap().contains("extra"));

    let missing = write(dir.path(), "m.json", r#"{"model": {"name": "bdg"}, "task": "holonomy"}"#);
    assert_eq!(holoq(&["validate", &missing]).status.code(), Some(2));

    // A loop through the exceptional ring cannot carry a frame.
    let ep = write(
        dir.path(),
        "ep.json",
        r#"{"model": {"name": "dirac", "s": 1.0}, "task": "holonomy",
            "geometry": {"loop": {"circle": {"center": [1.5, 0, 0], "radius": 0.5, "vertices": 64}}}}"#,
    );
    let o = holoq(&["run", &ep, "--out", out]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let diag: Value = serde_json::from_slice(o.stderr.split(|b| *b == b'\n').next().unwrap()).unwrap();
    assert!(diag["R"].is_array(), "{diag}");

    assert_eq!(holoq(&["run", "/nonexistent/job.json", "--out", out]).status.code(), Some(1));
    let good = write(dir.path(), "g.json", EP_SCAN);
    assert!(holoq(&["validate", &good]).status.success());
}

#[test]
fn evolve_and_flux_tasks() {
    let ev = parse_config(
        r#"{"model": {"name": "bdg"}, "task": "evolve",
            "geometry": {"path": {"circle": {"center": [0, 0, 0.9238795325112867], "radius": 0.3826834323650898}}},
            "numerics": {"total_time": 1000, "steps": 10000}}"#,
    )
    .unwrap();
    let r = execute(&ev, 1).unwrap().result;
    let beta = r["geometric_phase"]["re"].as_f64().unwrap();
    let theta = std::f64::consts::PI / 8.0;
    let want = std::f64::consts::PI * (theta.cos() / (2.0 * theta).cos().sqrt() - 1.0);
    assert!((beta - want).abs() < 1e-2, "{beta} vs {want}");
    assert!(r["leakage"].as_f64().unwrap() < 0.05);

    let fl = parse_config(
        r#"{"model": {"name": "bdg"}, "task": "flux",
            "geometry": {"surface": {"cube": {"center": [0, 0, 1.5], "side": 0.4}}}}"#,
    )
    .unwrap();
    let out = execute(&fl, 2).unwrap();
    assert!(out.table.is_none());
    assert!(out.result["flux_re"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn y_find_and_real_phase_tasks() {
    let y = parse_config(
        r#"{"model": {"name": "bdg"}, "task": "y-find",
            "geometry": {"points": [[0.2, 0.1, 1.0], [-0.3, 0.2, 1.5], [0.0, 0.0, 2.0]]}}"#,
    )
    .unwrap();
    let r = execute(&y, 1).unwrap().result;
    assert_eq!(r["found"], true);
    assert_eq!(r["alphas"], serde_json::json!([1, -1]));

    let rp = parse_config(
        r#"{"model": {"name": "dirac", "s": 1.0}, "task": "check-real-phase",
            "geometry": {"points": [[2, 0, 0], [0.5, 0, 0]]}}"#,
    )
    .unwrap();
    let out = execute(&rp, 1).unwrap();
    assert!(out.result["max_magnitude"].as_f64().unwrap() > 1e-3);
    assert_eq!(out.result["failures"], 1);
    assert_eq!(out.diagnostics.len(), 1);
}
