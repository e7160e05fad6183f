//! Run metrics and the two benchmark sweeps.
//!
//! Metrics are per-axis RMS Cartesian tracking error, control input energy
//! `∫|τᵀq̇|dt`, and overshoot (largest excursion from the geometric path).
//! The sweeps rerun all controllers over a grid of initial deviations or of
//! controller-model mass errors; cells are independent and run in parallel.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::sim::{self, ControllerKind, ControllerSpec, RunLog, Scenario, SimConfig};
use crate::traj::{SwingPath, TrajError};
use crate::Real;

/// Scalar metrics summarizing one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord<T> {
    /// Per-axis RMS of `x_des - x` over the logged span, m.
    pub rmse: Vector3<T>,
    /// Control input energy, J.
    pub energy: T,
    /// Max distance from the actual foot position to the desired path, m.
    pub overshoot: T,
    pub diverged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("fewer than two log samples in window [{t_start}, {t_end}] s")]
    EmptyWindow { t_start: f64, t_end: f64 },
}

fn window<'a, T: Real>(log: &'a RunLog<T>, t_i: T, t_f: T) -> Vec<&'a sim::Sample<T>> {
    let tol = (t_f - t_i).abs() * T::of(1e-12);
    log.samples
        .iter()
        .filter(|s| s.t >= t_i - tol && s.t <= t_f + tol)
        .collect()
}

/// Per-axis root-mean-square tracking error over `[t_i, t_f]`, the integral
/// taken by trapezoidal quadrature on the log grid.
pub fn rmse<T: Real>(log: &RunLog<T>, t_i: T, t_f: T) -> Result<Vector3<T>, AnalysisError> {
    let rows = window(log, t_i, t_f);
    if rows.len() < 2 {
        return Err(AnalysisError::EmptyWindow {
            t_start: t_i.as_f64(),
            t_end: t_f.as_f64(),
        });
    }
    let mut acc = Vector3::zeros();
    for pair in rows.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let ea = (a.x_des - a.x).map(|v| v * v);
        let eb = (b.x_des - b.x).map(|v| v * v);
        acc += (ea + eb) * ((b.t - a.t) * T::of(0.5));
    }
    let span = rows.last().unwrap().t - rows[0].t;
    Ok((acc / span).map(|v| v.sqrt()))
}

/// Largest per-axis absolute tracking error over `[t_i, t_f]` (how well the
/// controller holds the reference in that window).
pub fn max_abs_error_in_window<T: Real>(
    log: &RunLog<T>,
    t_i: T,
    t_f: T,
) -> Result<Vector3<T>, AnalysisError> {
    let rows = window(log, t_i, t_f);
    if rows.is_empty() {
        return Err(AnalysisError::EmptyWindow {
            t_start: t_i.as_f64(),
            t_end: t_f.as_f64(),
        });
    }
    let mut m: Vector3<T> = Vector3::zeros();
    for r in rows {
        m = m.zip_map(&(r.x_des - r.x), |acc: T, e| acc.max(e.abs()));
    }
    Ok(m)
}

/// Control input energy: trapezoidal quadrature of `|τᵀ q̇|` over the run.
pub fn control_energy<T: Real>(log: &RunLog<T>) -> T {
    let mut acc = T::zero();
    for pair in log.samples.windows(2) {
        let pa = pair[0].tau.dot(&pair[0].qd).abs();
        let pb = pair[1].tau.dot(&pair[1].qd).abs();
        acc += (pa + pb) * (pair[1].t - pair[0].t) * T::of(0.5);
    }
    acc
}

/// Max over log samples of the minimum Euclidean distance from the actual
/// foot position to the desired geometric path, the path discretized at ten
/// times the log resolution.
pub fn overshoot<T: Real>(log: &RunLog<T>, path: &SwingPath<T>) -> T {
    if log.samples.is_empty() {
        return T::zero();
    }
    let t0 = log.samples[0].t;
    let t1 = log.samples.last().unwrap().t;
    let n = (log.samples.len() - 1) * 10;
    let dense: Vec<Vector3<T>> = (0..=n.max(1))
        .map(|j| {
            let t = t0 + (t1 - t0) * T::of(j as f64 / n.max(1) as f64);
            path.eval_clamped(t).pos
        })
        .collect();
    let mut worst = T::zero();
    for row in &log.samples {
        let mut best = T::of(f64::INFINITY);
        for p in &dense {
            best = best.min((row.x - p).norm_squared());
        }
        worst = worst.max(best);
    }
    worst.sqrt()
}

/// All metrics for one run, evaluated over the full logged span.
pub fn run_metrics<T: Real>(
    log: &RunLog<T>,
    path: &SwingPath<T>,
) -> Result<MetricsRecord<T>, AnalysisError> {
    let t0 = log.samples.first().map(|s| s.t).unwrap_or_else(T::zero);
    let t1 = log.samples.last().map(|s| s.t).unwrap_or_else(T::zero);
    Ok(MetricsRecord {
        rmse: rmse(log, t0, t1)?,
        energy: control_energy(log),
        overshoot: overshoot(log, path),
        diverged: log.diverged,
    })
}

/// The benchmark's initial foot-position deviations, metres (5 mm steps in x,
/// 1 mm in y, -3 mm in z per grade).
pub fn deviation_presets<T: Real>() -> [Vector3<T>; 6] {
    std::array::from_fn(|i| {
        let k = T::of(i as f64);
        Vector3::new(T::of(0.005) * k, T::of(0.001) * k, T::of(-0.003) * k)
    })
}

/// Default model-error grid for the uncertainty sweep, percent.
pub fn default_uncertainty_pcts<T: Real>() -> [T; 6] {
    std::array::from_fn(|i| T::of(5.0 * i as f64))
}

/// Which quantity a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Deviation,
    Uncertainty,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Deviation => "deviation",
            SweepKind::Uncertainty => "uncertainty",
        }
    }
}

/// One sweep cell: a controller at one grid point. `value` is the deviation
/// grade index for deviation sweeps and the percentage for uncertainty
/// sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow<T> {
    pub controller: ControllerKind,
    pub kind: SweepKind,
    pub value: f64,
    pub rmse: Vector3<T>,
    pub energy: T,
    pub diverged: bool,
}

fn sweep_cell<T: Real>(
    scenario: &Scenario<T>,
    cfg: &SimConfig<T>,
    kind: SweepKind,
    value: f64,
) -> Result<SweepRow<T>, TrajError> {
    let log = sim::run_closed_loop(scenario, cfg)?;
    // a run that blows up immediately leaves too few rows to integrate
    let (rmse_v, energy) = if log.samples.len() < 2 {
        (Vector3::zeros(), T::zero())
    } else {
        match rmse(&log, log.samples[0].t, log.samples.last().unwrap().t) {
            Ok(r) => (r, control_energy(&log)),
            Err(_) => (Vector3::zeros(), T::zero()),
        }
    };
    Ok(SweepRow {
        controller: scenario.controller.kind(),
        kind,
        value,
        rmse: rmse_v,
        energy,
        diverged: log.diverged,
    })
}

fn run_grid<T: Real + Send + Sync>(
    cells: Vec<(Scenario<T>, SweepKind, f64)>,
    cfg: &SimConfig<T>,
) -> Result<Vec<SweepRow<T>>, TrajError> {
    cells
        .par_iter()
        .map(|(scenario, kind, value)| sweep_cell(scenario, cfg, *kind, *value))
        .collect()
}

fn ordered_controllers<T: Real>(controllers: &[ControllerSpec<T>]) -> Vec<ControllerSpec<T>> {
    let mut list = controllers.to_vec();
    list.sort_by_key(|c| c.kind());
    list
}

/// Run every controller over the deviation grid. Each cell inherits the base
/// scenario's uncertainty; rows come out grouped by controller name, grid
/// index ascending.
pub fn deviation_sweep<T: Real + Send + Sync>(
    base: &Scenario<T>,
    cfg: &SimConfig<T>,
    controllers: &[ControllerSpec<T>],
    deviations: &[Vector3<T>],
) -> Result<Vec<SweepRow<T>>, TrajError> {
    let mut cells = Vec::new();
    for controller in ordered_controllers(controllers) {
        for (i, dev) in deviations.iter().enumerate() {
            let scenario = Scenario {
                controller,
                deviation: *dev,
                ..*base
            };
            cells.push((scenario, SweepKind::Deviation, i as f64));
        }
    }
    run_grid(cells, cfg)
}

/// Run every controller over the model-error grid. Each cell inherits the
/// base scenario's deviation; only the controller-side model is perturbed.
pub fn uncertainty_sweep<T: Real + Send + Sync>(
    base: &Scenario<T>,
    cfg: &SimConfig<T>,
    controllers: &[ControllerSpec<T>],
    pcts: &[T],
) -> Result<Vec<SweepRow<T>>, TrajError> {
    let mut cells = Vec::new();
    for controller in ordered_controllers(controllers) {
        for pct in pcts {
            let scenario = Scenario {
                controller,
                uncertainty_pct: *pct,
                ..*base
            };
            cells.push((scenario, SweepKind::Uncertainty, pct.as_f64()));
        }
    }
    run_grid(cells, cfg)
}

/// Bundle the three controller laws at the given gains, in report order.
pub fn controller_set<T: Real>(
    smc: crate::control::SmcGains<T>,
    tj: crate::control::TjGains<T>,
    atj: crate::control::AtjGains<T>,
    ref_model: crate::control::RefModelParams<T>,
) -> [ControllerSpec<T>; 3] {
    [
        ControllerSpec::Atj {
            gains: atj,
            ref_model,
        },
        ControllerSpec::Smc(smc),
        ControllerSpec::Tj(tj),
    ]
}

/// Per-axis spread (max minus min) of RMSE across one controller's rows.
pub fn rmse_spread<T: Real>(rows: &[SweepRow<T>], controller: ControllerKind) -> Vector3<T> {
    let mut lo = Vector3::repeat(T::of(f64::INFINITY));
    let mut hi = Vector3::repeat(T::of(f64::NEG_INFINITY));
    for row in rows.iter().filter(|r| r.controller == controller) {
        lo = lo.zip_map(&row.rmse, |a, b| a.min(b));
        hi = hi.zip_map(&row.rmse, |a, b| a.max(b));
    }
    hi - lo
}
