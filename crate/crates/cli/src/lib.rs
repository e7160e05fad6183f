//! Command implementations behind the `legbench` binary: single runs with
//! time-series and metrics CSVs, the two benchmark sweeps, and the model
//! validation report.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use legbench_core::analysis::{
    self, deviation_presets, run_metrics, SweepKind, SweepRow,
};
use legbench_core::sim::{run_closed_loop, ControllerKind, ControllerSpec, Extra, RunLog};
use legbench_core::traj::TrajError;
use legbench_core::validate::{self, CheckReport};
use legbench_core::{Scenario, Vec3};

use config::{ConfigError, Manifest};

/// Exit codes: 0 success, 1 validation failure, 2 configuration or I/O
/// error, 3 divergence in a non-sweep run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION_FAILED: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CmdError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("reference path is not executable: {0}")]
    Reference(#[from] TrajError),
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CmdError> {
    std::fs::write(path, contents).map_err(|source| CmdError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn controller_spec(m: &Manifest, kind: ControllerKind) -> ControllerSpec<f64> {
    match kind {
        ControllerKind::Smc => ControllerSpec::Smc(m.smc),
        ControllerKind::Tj => ControllerSpec::Tj(m.tj),
        ControllerKind::Atj => ControllerSpec::Atj {
            gains: m.atj,
            ref_model: m.ref_model,
        },
    }
}

fn scenario(m: &Manifest, kind: ControllerKind, deviation: Vec3, pct: f64) -> Scenario {
    Scenario {
        plant: m.model,
        path: m.path,
        branch: m.branch,
        controller: controller_spec(m, kind),
        deviation,
        uncertainty_pct: pct,
    }
}

fn run_csv(log: &RunLog<f64>, kind: ControllerKind) -> String {
    let mut s = String::new();
    s.push_str("t,q1,q2,q3,qd1,qd2,qd3,x,y,z,xd,yd,zd,tau1,tau2,tau3");
    match kind {
        ControllerKind::Smc => s.push_str(",s1,s2,s3"),
        ControllerKind::Atj => s.push_str(",xdc,ydc,zdc,kp,kd"),
        ControllerKind::Tj => {}
    }
    s.push('\n');
    for row in &log.samples {
        let mut cols: Vec<String> = vec![fmt(row.t)];
        for v in [&row.q, &row.qd, &row.x, &row.x_des, &row.tau] {
            cols.extend(v.iter().map(|x| fmt(*x)));
        }
        match row.extra {
            Extra::None => {}
            Extra::Smc { s: surf } => cols.extend(surf.iter().map(|x| fmt(*x))),
            Extra::Atj {
                corrected,
                k_p,
                k_d,
            } => {
                cols.extend(corrected.iter().map(|x| fmt(*x)));
                cols.push(fmt(k_p));
                cols.push(fmt(k_d));
            }
        }
        s.push_str(&cols.join(","));
        s.push('\n');
    }
    s
}

/// Run the selected controllers, write one time-series CSV per controller
/// plus a metrics summary, and return the exit code.
pub fn cmd_run(m: &Manifest, out_dir: &Path) -> Result<i32, CmdError> {
    std::fs::create_dir_all(out_dir).map_err(|source| CmdError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut metrics = String::from("controller,rmse_x,rmse_y,rmse_z,energy,overshoot,diverged\n");
    let mut any_diverged = false;
    for kind in &m.controllers {
        let sc = scenario(m, *kind, m.deviation, m.uncertainty_pct);
        let log = run_closed_loop(&sc, &m.sim)?;
        any_diverged |= log.diverged;
        write_file(
            &out_dir.join(format!("run_{}.csv", kind.name())),
            &run_csv(&log, *kind),
        )?;
        match run_metrics(&log, &m.path) {
            Ok(rec) => {
                let _ = writeln!(
                    metrics,
                    "{},{},{},{},{},{},{}",
                    kind.name(),
                    fmt(rec.rmse[0]),
                    fmt(rec.rmse[1]),
                    fmt(rec.rmse[2]),
                    fmt(rec.energy),
                    fmt(rec.overshoot),
                    rec.diverged
                );
            }
            Err(_) => {
                // not enough rows to integrate: report zeros, keep the flag
                let _ = writeln!(
                    metrics,
                    "{},{},{},{},{},{},{}",
                    kind.name(),
                    fmt(0.0),
                    fmt(0.0),
                    fmt(0.0),
                    fmt(0.0),
                    fmt(0.0),
                    log.diverged
                );
            }
        }
    }
    write_file(&out_dir.join("metrics.csv"), &metrics)?;
    Ok(if any_diverged { EXIT_DIVERGED } else { EXIT_OK })
}

fn sweep_csv(rows: &[SweepRow<f64>]) -> String {
    let mut s = String::from("controller,sweep_kind,sweep_value,rmse_x,rmse_y,rmse_z,energy,diverged\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.controller.name(),
            r.kind.name(),
            r.value,
            fmt(r.rmse[0]),
            fmt(r.rmse[1]),
            fmt(r.rmse[2]),
            fmt(r.energy),
            r.diverged
        );
    }
    s
}

/// Run one of the two benchmark sweeps and write its long-format CSV.
///
/// Sweeps isolate their variable: the deviation sweep runs with a nominal
/// controller model, the uncertainty sweep from the on-path start. The
/// manifest's `run.*` settings apply to single runs only.
pub fn cmd_sweep(m: &Manifest, kind: SweepKind, out_dir: &Path) -> Result<i32, CmdError> {
    std::fs::create_dir_all(out_dir).map_err(|source| CmdError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let controllers: Vec<ControllerSpec<f64>> = m
        .controllers
        .iter()
        .map(|k| controller_spec(m, *k))
        .collect();
    let base = scenario(m, m.controllers[0], Vec3::zeros(), 0.0);
    let rows = match kind {
        SweepKind::Deviation => analysis::deviation_sweep(
            &base,
            &m.sim,
            &controllers,
            &deviation_presets::<f64>(),
        )?,
        SweepKind::Uncertainty => {
            analysis::uncertainty_sweep(&base, &m.sim, &controllers, &m.sweep_pcts)?
        }
    };
    write_file(
        &out_dir.join(format!("sweep_{}.csv", kind.name())),
        &sweep_csv(&rows),
    )?;
    Ok(EXIT_OK)
}

/// Faults the validation command can inject to prove its failure path works.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectFault {
    Jacobian,
}

/// Run the numerical self-checks, render the report, and return it with the
/// exit code (0 if every check passed).
pub fn cmd_validate(m: &Manifest, inject: Option<InjectFault>) -> (String, i32) {
    let mut reports = validate::run_all(&m.model, &m.path.profile);
    if inject == Some(InjectFault::Jacobian) {
        let geom = m.model.geom;
        let corrupted = validate::check_jacobian_vs_fd_with(&geom, move |q| {
            let mut j = geom.jacobian(q);
            j[(0, 0)] += 1e-3;
            j
        });
        if let Some(slot) = reports.iter_mut().find(|r| r.name == corrupted.name) {
            *slot = corrupted;
        }
    }
    (render_report(&reports), exit_code(&reports))
}

fn exit_code(reports: &[CheckReport]) -> i32 {
    if reports.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_VALIDATION_FAILED
    }
}

fn render_report(reports: &[CheckReport]) -> String {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for r in reports {
        let _ = writeln!(
            s,
            "{:width$}  tolerance {:9.2e}  observed {:13.6e}  {}",
            r.name,
            r.tolerance,
            r.observed,
            if r.passed { "pass" } else { "FAIL" },
        );
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    let _ = writeln!(
        s,
        "{} checks, {} failed",
        reports.len(),
        failed
    );
    s
}
