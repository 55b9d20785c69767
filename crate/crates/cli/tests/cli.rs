use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn swingleg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swingleg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn plan_writes_full_trajectory() {
    let dir = TempDir::new().unwrap();
    let o = swingleg(dir.path(), &["plan", "--out", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("run/trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "time,theta1,theta2,theta3,dtheta1,dtheta2,dtheta3,ddtheta1,ddtheta2,ddtheta3"
    );
    assert_eq!(lines.count(), 201);
    let foot = fs::read_to_string(dir.path().join("run/foot_path.csv")).unwrap();
    assert_eq!(foot.lines().count(), 202);
}

#[test]
fn zero_duration_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "trajectory": {"total_time": 0.0}}"#,
    );
    let o = swingleg(dir.path(), &["plan", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("duration"));
}

#[test]
fn all_zero_waypoints_give_constant_pose() {
    let dir = TempDir::new().unwrap();
    let rest = r#"{"angle": [0, 0, 0], "rate": [0, 0, 0], "accel": [0, 0, 0]}"#;
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"schema_version": 1, "trajectory": {{"start": {rest}, "mid": {rest}, "end": {rest}}}}}"#
        ),
    );
    let o = swingleg(dir.path(), &["plan", "--config", &cfg, "--out", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("run/trajectory.csv")).unwrap();
    for row in csv.lines().skip(1) {
        assert!(
            row.split(',')
                .skip(1)
                .all(|v| v.parse::<f64>().unwrap() == 0.0),
            "{row}"
        );
    }
}

#[test]
fn malformed_config_reports_location() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "{\n  \"schema_version\": 1,\n  \"gaa\": {}\n}");
    let o = swingleg(dir.path(), &["plan", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("gaa") && err.contains("line 3"), "{err}");
}

#[test]
fn missing_config_is_io_error() {
    let dir = TempDir::new().unwrap();
    let o = swingleg(dir.path(), &["plan", "--config", "nope.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_round_trips_through_cli() {
    let dir = TempDir::new().unwrap();
    let o = swingleg(
        dir.path(),
        &["config", "--seed", "9", "--energy-mode", "signed"],
    );
    assert!(o.status.success());
    let printed = String::from_utf8(o.stdout).unwrap();
    let cfg = write_config(dir.path(), &printed);
    let again = swingleg(dir.path(), &["config", "--config", &cfg]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), printed);
    assert!(printed.contains("\"seed\": 9") && printed.contains("\"signed\""));
}

#[test]
fn evaluate_baseline_and_comparison() {
    let dir = TempDir::new().unwrap();
    let o = swingleg(dir.path(), &["evaluate", "--out", "base"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("base/metrics.json")).unwrap())
            .unwrap();
    assert!(m["baseline"].is_null());
    let hip = m["values"]["peak_torque"][1].as_f64().unwrap();
    assert!(hip > 100.0 && hip < 170.0, "{hip}");

    let geom = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/reference_optimized_geometry.json"
    );
    let o = swingleg(
        dir.path(),
        &["evaluate", "--geometry", geom, "--out", "cmp"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("cmp/comparison.txt")).unwrap();
    assert!(table.contains("Peak joint torque") && table.contains("reduction (%)"));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cmp/metrics.json")).unwrap())
            .unwrap();
    for i in 0..3 {
        let r = m["ratios"]["peak_torque"][i].as_f64().unwrap();
        assert!(r > 0.6 && r < 0.9, "ratio {r}");
    }
}

#[test]
fn evaluate_rejects_invalid_geometry() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{
  "coxa": {"length": 0.14, "width": 0.121, "height": 0.179, "wall_thickness": 0.03},
  "femur": {"length": 0.46, "width": 0.04, "height": 0.158, "wall_thickness": 0.03},
  "tibia": {"length": 0.46, "width": 0.117, "height": 0.144, "wall_thickness": 0.03}
}"#,
    )
    .unwrap();
    let o = swingleg(
        dir.path(),
        &["evaluate", "--geometry", bad.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("femur"));
}

#[test]
fn optimize_is_reproducible_and_idempotent() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "ga": {"population_size": 20, "generations": 10}}"#,
    );
    let files = [
        "best_genome.json",
        "history.csv",
        "optimized_geometry.json",
        "comparison.txt",
    ];
    let read = |sub: &str| -> Vec<Vec<u8>> {
        files
            .iter()
            .map(|f| fs::read(dir.path().join(sub).join(f)).unwrap())
            .collect()
    };

    for (threads, out) in [("1", "a"), ("3", "b"), ("3", "a")] {
        let o = swingleg(
            dir.path(),
            &[
                "optimize",
                "--config",
                &cfg,
                "--threads",
                threads,
                "--out",
                out,
            ],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(read("a"), read("b"));
    let history = String::from_utf8(read("a")[1].clone()).unwrap();
    assert_eq!(history.lines().count(), 12);
    assert!(history.starts_with("generation,best_eval,best_f,f_t,f_q,f_d,f_ei,feasible\n0,"));

    let o = swingleg(
        dir.path(),
        &["optimize", "--config", &cfg, "--seed", "5", "--out", "c"],
    );
    assert!(o.status.success());
    assert_ne!(read("a")[0], read("c")[0]);
}

#[test]
fn zero_generations_reports_initial_population() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "ga": {"population_size": 10, "generations": 0}}"#,
    );
    let o = swingleg(dir.path(), &["optimize", "--config", &cfg, "--out", "z"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let history = fs::read_to_string(dir.path().join("z/history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2);
}

#[test]
fn bounds_excluding_initial_geometry_rejected() {
    let dir = TempDir::new().unwrap();
    let lower = "[0.10, 0.43, 0.43, 0.07, 0.07, 0.07, 0.07, 0.07, 0.07]";
    let upper = "[0.12, 0.46, 0.46, 0.20, 0.20, 0.20, 0.20, 0.20, 0.20]";
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"schema_version": 1, "ga": {{"population_size": 10, "generations": 2, "bounds": {{"lower": {lower}, "upper": {upper}}}}}}}"#
        ),
    );
    let o = swingleg(dir.path(), &["optimize", "--config", &cfg, "--out", "x"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("initial geometry"));
}

#[test]
fn verify_default_passes() {
    let dir = TempDir::new().unwrap();
    let o = swingleg(dir.path(), &["verify", "--out", "v"]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{out}{}", stderr(&o));
    assert!(out.contains("PASS oracle sweep"));
    assert!(dir.path().join("v/verification.json").exists());
}

#[test]
fn verify_with_tiny_tolerance_fails() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "verify": {"states": 50, "oracle": {"tolerance": 1e-15}}}"#,
    );
    let o = swingleg(dir.path(), &["verify", "--config", &cfg, "--out", "v"]);
    assert_eq!(o.status.code(), Some(4));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(
        out.contains("FAIL oracle sweep") && out.contains("below the cancellation floor"),
        "{out}"
    );
}

#[test]
fn verify_surfaces_singular_inertia() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
  "schema_version": 1,
  "allow_degenerate": true,
  "verify": {"states": 20},
  "geometry": {
    "coxa": {"length": 0.14, "width": 0.121, "height": 0.179, "mass": 6.06},
    "femur": {"length": 0.0, "width": 0.183, "height": 0.158, "wall_thickness": 0.0276},
    "tibia": {"length": 0.0, "width": 0.117, "height": 0.144, "wall_thickness": 0.0269}
  }
}"#,
    );
    let o = swingleg(dir.path(), &["verify", "--config", &cfg, "--out", "v"]);
    assert_eq!(o.status.code(), Some(4));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(
        out.contains("FAIL forward round trip") && out.contains("not positive definite"),
        "{out}"
    );
}

#[test]
fn simulate_compares_power() {
    let dir = TempDir::new().unwrap();
    let geom = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/reference_optimized_geometry.json"
    );
    let o = swingleg(dir.path(), &["simulate", "--geometry", geom, "--out", "s"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let power = fs::read_to_string(dir.path().join("s/power.csv")).unwrap();
    assert!(power.starts_with("time,P1,P2,P3\n"));
    assert_eq!(power.lines().count(), 202);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s/power_summary.json")).unwrap())
            .unwrap();
    assert!(summary["round_trip_error"].as_f64().unwrap() < 1e-3);
    let red = summary["reduction_percent"].as_array().unwrap();
    assert!(red.iter().all(|r| r.as_f64().unwrap() > 10.0), "{summary}");
}

#[test]
fn quiet_suppresses_summary_but_writes_files() {
    let dir = TempDir::new().unwrap();
    let o = swingleg(dir.path(), &["plan", "--quiet", "--out", "q"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    assert!(dir.path().join("q/trajectory.csv").exists());
}
