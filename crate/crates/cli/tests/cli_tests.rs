//! End-to-end checks of the `legbench` binary: artifacts, exit codes,
//! determinism across invocations and thread counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn legbench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_legbench"))
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("legbench.conf");
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

const BASE_HEADER: &str = "t,q1,q2,q3,qd1,qd2,qd3,x,y,z,xd,yd,zd,tau1,tau2,tau3";

#[test]
fn run_writes_per_controller_logs_and_metrics() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "");
    let out_dir = tmp.path().join("out");

    let out = legbench()
        .args(["run", "-c"])
        .arg(&cfg)
        .arg("-o")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    for (name, extra) in [
        ("run_atj.csv", ",xdc,ydc,zdc,kp,kd"),
        ("run_smc.csv", ",s1,s2,s3"),
        ("run_tj.csv", ""),
    ] {
        let text = read(&out_dir.join(name));
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            format!("{BASE_HEADER}{extra}"),
            "{name} header"
        );
        // 3 s at 1 kHz logs the initial row plus one per tick
        assert_eq!(lines.count(), 3001, "{name} row count");
    }

    let metrics = read(&out_dir.join("metrics.csv"));
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(
        lines[0],
        "controller,rmse_x,rmse_y,rmse_z,energy,overshoot,diverged"
    );
    assert_eq!(lines.len(), 4);
    for (row, name) in lines[1..].iter().zip(["atj", "smc", "tj"]) {
        assert!(row.starts_with(&format!("{name},")), "row: {row}");
        assert!(row.ends_with(",false"), "row: {row}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "run.controllers = smc tj\n");
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for dir in &dirs {
        let out = legbench()
            .args(["run", "-c"])
            .arg(&cfg)
            .arg("-o")
            .arg(dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    }
    for name in ["run_smc.csv", "run_tj.csv", "metrics.csv"] {
        let a = std::fs::read(dirs[0].join(name)).unwrap();
        let b = std::fs::read(dirs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between invocations");
    }
}

#[test]
fn run_respects_controller_selection() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "run.controllers = smc\n");
    let out_dir = tmp.path().join("out");
    let out = legbench()
        .args(["run", "-c"])
        .arg(&cfg)
        .arg("-o")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("run_smc.csv").exists());
    assert!(!out_dir.join("run_tj.csv").exists());
    assert!(!out_dir.join("run_atj.csv").exists());
    assert_eq!(read(&out_dir.join("metrics.csv")).lines().count(), 2);
}

#[test]
fn validate_passes_on_defaults() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "");
    let out = legbench()
        .args(["validate", "-c"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let report = stdout_of(&out);
    for name in [
        "energy-conservation",
        "mass-matrix-symmetry",
        "mass-matrix-positive-definite",
        "coriolis-skew-residual",
        "jacobian-vs-fd",
        "fk-ik-roundtrip",
        "trapezoid-continuity",
        "trapezoid-endpoint",
    ] {
        assert!(report.contains(name), "report missing {name}:\n{report}");
    }
    assert!(report.contains("8 checks, 0 failed"), "{report}");
    assert!(!report.contains("FAIL"), "{report}");
}

#[test]
fn injected_fault_trips_validation() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "");
    let out = legbench()
        .args(["validate", "--inject-fault", "jacobian", "-c"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_of(&out);
    assert!(report.contains("FAIL"), "{report}");
    assert!(report.contains("8 checks, 1 failed"), "{report}");
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "leg.m2 = -1\n");
    let out = legbench()
        .args(["run", "-c"])
        .arg(&cfg)
        .arg("-o")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("leg.m2"), "{}", stderr_of(&out));

    let cfg = write_cfg(tmp.path(), "leg.l9 = 1\n");
    let out = legbench()
        .args(["validate", "-c"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("leg.l9") && err.contains("line 1"), "{err}");
}

#[test]
fn missing_config_exits_2_with_path() {
    let tmp = TempDir::new().unwrap();
    let out = legbench()
        .args(["run", "-c", "/nonexistent/legbench.conf", "-o"])
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_of(&out).contains("/nonexistent/legbench.conf"),
        "{}",
        stderr_of(&out)
    );
}

#[test]
fn unstable_gains_exit_3_and_flag_divergence() {
    let tmp = TempDir::new().unwrap();
    // stiffness far beyond what the integrator can follow at this step size
    let cfg = write_cfg(tmp.path(), "run.controllers = tj\ntj.kp = 1e9 1e9 1e9\n");
    let out_dir = tmp.path().join("out");
    let out = legbench()
        .args(["run", "-c"])
        .arg(&cfg)
        .arg("-o")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    let metrics = read(&out_dir.join("metrics.csv"));
    assert!(metrics.lines().nth(1).unwrap().ends_with(",true"), "{metrics}");
}

#[test]
fn sweeps_write_full_grids() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "");
    for (kind, file) in [
        ("deviation", "sweep_deviation.csv"),
        ("uncertainty", "sweep_uncertainty.csv"),
    ] {
        let out_dir = tmp.path().join(kind);
        let out = legbench()
            .args(["sweep", "--kind", kind, "-c"])
            .arg(&cfg)
            .arg("-o")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
        let text = read(&out_dir.join(file));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "controller,sweep_kind,sweep_value,rmse_x,rmse_y,rmse_z,energy,diverged"
        );
        // three controllers over six grid points
        assert_eq!(lines.len(), 19, "{file}");
        for (i, name) in ["atj", "smc", "tj"].iter().enumerate() {
            for (j, row) in lines[1 + 6 * i..7 + 6 * i].iter().enumerate() {
                assert!(row.starts_with(&format!("{name},{kind},")), "row: {row}");
                let value: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
                let expected = if kind == "deviation" { j as f64 } else { 5.0 * j as f64 };
                assert_eq!(value, expected, "row: {row}");
            }
        }
    }
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "");
    let mut outputs = Vec::new();
    for (dir, threads) in [("par", None), ("one", Some("1")), ("three", Some("3"))] {
        let out_dir = tmp.path().join(dir);
        let mut cmd = legbench();
        cmd.args(["sweep", "--kind", "uncertainty", "-c"])
            .arg(&cfg)
            .arg("-o")
            .arg(&out_dir);
        if let Some(n) = threads {
            cmd.env("LEGBENCH_THREADS", n);
        }
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
        outputs.push(std::fs::read(out_dir.join("sweep_uncertainty.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn bad_usage_exits_2() {
    let out = legbench().args(["sweep", "--kind", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = legbench().output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "");
    let out = legbench()
        .args(["validate", "--inject-fault", "bogus", "-c"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
