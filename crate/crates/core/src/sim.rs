//! Closed-loop simulation of one controller tracking the swing path.
//!
//! The control loop runs at a fixed rate; torques are held constant between
//! ticks while the rigid-body dynamics are integrated with several classical
//! Runge-Kutta substeps per tick. Everything is deterministic: the same
//! scenario and configuration reproduce a run bit for bit.

use nalgebra::Vector3;

use crate::control::{
    self, AtjGains, AtjState, RefModelParams, SmcGains, TjGains,
};
use crate::leg::{IkBranch, JointState, LegModel, ParamError};
use crate::traj::{self, SwingPath, TrajError};
use crate::Real;

/// Loop timing: controller period `dt`, integrator substeps per period,
/// horizon `t_end`, and the logging decimation `log_stride` (a row every
/// `log_stride` ticks).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    pub dt: T,
    pub substeps: u32,
    pub t_end: T,
    pub log_stride: u32,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            dt: T::of(1e-3),
            substeps: 4,
            t_end: T::of(3.0),
            log_stride: 1,
        }
    }
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<(), ParamError> {
        let err = |field, reason| Err(ParamError { field, reason });
        if !(self.dt > T::zero()) {
            return err("sim.dt", "must be strictly positive");
        }
        if self.substeps == 0 {
            return err("sim.substeps", "must be at least 1");
        }
        if !(self.t_end > T::zero()) {
            return err("sim.t_end", "must be strictly positive");
        }
        if self.log_stride == 0 {
            return err("sim.log_stride", "must be at least 1");
        }
        Ok(())
    }

    /// Number of control ticks after the initial one; tick `k` runs at
    /// `t = k dt` for `k = 0..=n_ticks`.
    pub fn n_ticks(&self) -> usize {
        ((self.t_end.as_f64() / self.dt.as_f64()) * (1.0 + 1e-12)).floor() as usize
    }
}

/// Controller selection, carrying each law's gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerSpec<T> {
    Smc(SmcGains<T>),
    Tj(TjGains<T>),
    Atj {
        gains: AtjGains<T>,
        ref_model: RefModelParams<T>,
    },
}

impl<T: Real> ControllerSpec<T> {
    pub fn kind(&self) -> ControllerKind {
        match self {
            ControllerSpec::Smc(_) => ControllerKind::Smc,
            ControllerSpec::Tj(_) => ControllerKind::Tj,
            ControllerSpec::Atj { .. } => ControllerKind::Atj,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        match self {
            ControllerSpec::Smc(g) => g.validate(),
            ControllerSpec::Tj(g) => g.validate(),
            ControllerSpec::Atj { gains, ref_model } => {
                gains.validate()?;
                ref_model.validate()
            }
        }
    }
}

/// Controller family, ordered by name (`atj`, `smc`, `tj`) so reports list
/// rows the same way everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ControllerKind {
    Atj,
    Smc,
    Tj,
}

impl ControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Atj => "atj",
            ControllerKind::Smc => "smc",
            ControllerKind::Tj => "tj",
        }
    }
}

/// Everything a run needs: the true plant, the path, which knee branch the
/// reference uses, the controller, the initial foot-position deviation, and
/// the controller-side model error (masses and inertias scaled by
/// `1 + uncertainty_pct/100`; the plant itself is never perturbed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario<T> {
    pub plant: LegModel<T>,
    pub path: SwingPath<T>,
    pub branch: IkBranch,
    pub controller: ControllerSpec<T>,
    pub deviation: Vector3<T>,
    pub uncertainty_pct: T,
}

impl<T: Real> Scenario<T> {
    pub fn validate(&self) -> Result<(), ParamError> {
        self.plant.validate()?;
        self.path.validate()?;
        self.controller.validate()?;
        if !(self.uncertainty_pct >= T::zero()) {
            return Err(ParamError {
                field: "run.uncertainty_pct",
                reason: "must be non-negative",
            });
        }
        Ok(())
    }
}

/// Copy of the model with masses and inertias scaled by `1 + pct/100`.
pub fn perturb_model<T: Real>(model: &LegModel<T>, pct: T) -> LegModel<T> {
    let f = T::one() + pct / T::of(100.0);
    let mut m = *model;
    m.inertial.m1 *= f;
    m.inertial.m2 *= f;
    m.inertial.m3 *= f;
    m.inertial.i1 *= f;
    m.inertial.i2 *= f;
    m.inertial.i3 *= f;
    m
}

/// Controller-specific extras worth logging alongside the common columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extra<T> {
    None,
    Smc { s: Vector3<T> },
    Atj { corrected: Vector3<T>, k_p: T, k_d: T },
}

/// One logged row of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub q: Vector3<T>,
    pub qd: Vector3<T>,
    /// Foot position.
    pub x: Vector3<T>,
    /// Desired foot position (the raw path, not the corrected one).
    pub x_des: Vector3<T>,
    pub tau: Vector3<T>,
    pub extra: Extra<T>,
}

/// A completed (or aborted) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog<T> {
    pub samples: Vec<Sample<T>>,
    /// Set when the state blew up; `samples` then ends at the last finite row.
    pub diverged: bool,
}

fn blown_up<T: Real>(state: &JointState<T>) -> bool {
    let bound = T::of(1e6);
    for i in 0..3 {
        let (q, qd) = (state.q[i], state.qd[i]);
        if !(q.is_finite() && qd.is_finite()) || q.abs() > bound || qd.abs() > bound {
            return true;
        }
    }
    false
}

/// One classical Runge-Kutta step of the rigid-body dynamics under constant
/// torque.
pub fn rk4_step<T: Real>(
    plant: &LegModel<T>,
    state: &JointState<T>,
    tau: &Vector3<T>,
    h: T,
) -> JointState<T> {
    let f = |s: &JointState<T>| -> (Vector3<T>, Vector3<T>) {
        (s.qd, plant.forward_dynamics(s, tau, &Vector3::zeros()))
    };
    let half = T::of(0.5);
    let sixth = T::one() / T::of(6.0);
    let two = T::of(2.0);
    let at = |s: &JointState<T>, kq: &Vector3<T>, kv: &Vector3<T>, c: T| JointState {
        q: s.q + kq * (c * h),
        qd: s.qd + kv * (c * h),
    };
    let (k1q, k1v) = f(state);
    let (k2q, k2v) = f(&at(state, &k1q, &k1v, half));
    let (k3q, k3v) = f(&at(state, &k2q, &k2v, half));
    let (k4q, k4v) = f(&at(state, &k3q, &k3v, T::one()));
    JointState {
        q: state.q + (k1q + k2q * two + k3q * two + k4q) * (h * sixth),
        qd: state.qd + (k1v + k2v * two + k3v * two + k4v) * (h * sixth),
    }
}

enum ControllerMemory<T: Real> {
    Smc { model: LegModel<T>, gains: SmcGains<T>, k: Vector3<T> },
    Tj { gains: TjGains<T> },
    Atj { gains: AtjGains<T>, ref_model: RefModelParams<T>, st: AtjState<T> },
}

/// Simulate the scenario over `[0, t_end]`.
///
/// The plant starts at rest with the foot placed at the path start plus the
/// configured deviation. Each tick evaluates the controller, logs (subject to
/// the stride), then integrates the plant to the next tick under the held
/// torque. Reference lookups past `t_end` caused by roundoff hold the path
/// endpoint.
pub fn run_closed_loop<T: Real>(
    scenario: &Scenario<T>,
    config: &SimConfig<T>,
) -> Result<RunLog<T>, TrajError> {
    let geom = &scenario.plant.geom;
    let start = scenario.path.eval_clamped(T::zero());
    let init = geom.inverse_kinematics(&(start.pos + scenario.deviation), scenario.branch)?;
    let mut state = JointState::at_rest(init.q);

    let hat = perturb_model(&scenario.plant, scenario.uncertainty_pct);
    let mut memory = match &scenario.controller {
        ControllerSpec::Smc(gains) => ControllerMemory::Smc {
            model: hat,
            gains: *gains,
            k: control::switching_gains(
                gains,
                scenario.uncertainty_pct,
                &hat,
                &scenario.path,
                scenario.branch,
            )?,
        },
        ControllerSpec::Tj(gains) => ControllerMemory::Tj { gains: *gains },
        ControllerSpec::Atj { gains, ref_model } => ControllerMemory::Atj {
            gains: *gains,
            ref_model: *ref_model,
            st: AtjState::init(start.pos),
        },
    };

    let n = config.n_ticks();
    let h = config.dt / T::of(config.substeps as f64);
    let mut samples = Vec::with_capacity(n / config.log_stride as usize + 1);
    let mut diverged = false;

    'ticks: for k in 0..=n {
        let t = config.dt * T::of(k as f64);
        let target = scenario.path.eval_clamped(t);

        let (tau, extra) = match &mut memory {
            ControllerMemory::Smc { model, gains, k: kvec } => {
                let reference = traj::joint_reference(&scenario.path, geom, scenario.branch, t)?;
                let (tau, s) = control::smc_torque(model, gains, kvec, &state, &reference);
                (tau, Extra::Smc { s })
            }
            ControllerMemory::Tj { gains } => (
                control::tj_torque(geom, gains, &state, &target.pos, &target.vel),
                Extra::None,
            ),
            ControllerMemory::Atj { gains, ref_model, st } => {
                let (tau, info, next) =
                    control::atj_control(&state, &target, geom, gains, ref_model, st, config.dt);
                *st = next;
                (
                    tau,
                    Extra::Atj {
                        corrected: info.corrected_pos,
                        k_p: info.k_p,
                        k_d: info.k_d,
                    },
                )
            }
        };

        if k % config.log_stride as usize == 0 {
            samples.push(Sample {
                t,
                q: state.q,
                qd: state.qd,
                x: geom.forward_kinematics(&state.q),
                x_des: target.pos,
                tau,
                extra,
            });
        }

        if k < n {
            for _ in 0..config.substeps {
                state = rk4_step(&scenario.plant, &state, &tau, h);
                if blown_up(&state) {
                    diverged = true;
                    break 'ticks;
                }
            }
        }
    }

    Ok(RunLog { samples, diverged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn base_scenario(controller: ControllerSpec<f64>) -> Scenario<f64> {
        Scenario {
            plant: LegModel::default(),
            path: SwingPath::default(),
            branch: IkBranch::KneeDown,
            controller,
            deviation: Vector3::zeros(),
            uncertainty_pct: 0.0,
        }
    }

    #[test]
    fn default_run_logs_full_time_grid() {
        let scenario = base_scenario(ControllerSpec::Tj(TjGains::default()));
        let config = SimConfig::default();
        let log = run_closed_loop(&scenario, &config).unwrap();
        assert!(!log.diverged);
        assert_eq!(log.samples.len(), 3001);
        for (k, row) in log.samples.iter().enumerate() {
            assert_eq!(row.t, 1e-3 * k as f64);
        }
    }

    #[test]
    fn log_stride_decimates_rows() {
        let scenario = base_scenario(ControllerSpec::Tj(TjGains::default()));
        let config = SimConfig {
            log_stride: 10,
            ..SimConfig::default()
        };
        let log = run_closed_loop(&scenario, &config).unwrap();
        assert_eq!(log.samples.len(), 301);
        assert_eq!(log.samples[1].t, 1e-2);
    }

    #[test]
    fn desired_column_is_the_raw_path() {
        let scenario = base_scenario(ControllerSpec::Atj {
            gains: AtjGains::default(),
            ref_model: RefModelParams::default(),
        });
        let config = SimConfig::default();
        let log = run_closed_loop(&scenario, &config).unwrap();
        for row in &log.samples {
            let p = scenario.path.eval_clamped(row.t);
            assert_eq!(row.x_des, p.pos);
        }
    }

    #[test]
    fn runs_are_bitwise_deterministic() {
        let scenario = Scenario {
            deviation: Vector3::new(0.020, 0.004, -0.012),
            uncertainty_pct: 20.0,
            ..base_scenario(ControllerSpec::Smc(SmcGains::default()))
        };
        let config = SimConfig::default();
        let a = run_closed_loop(&scenario, &config).unwrap();
        let b = run_closed_loop(&scenario, &config).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (ra, rb) in a.samples.iter().zip(&b.samples) {
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn initial_state_reflects_deviation() {
        let dev = Vector3::new(0.020, 0.004, -0.012);
        let scenario = Scenario {
            deviation: dev,
            ..base_scenario(ControllerSpec::Tj(TjGains::default()))
        };
        let log = run_closed_loop(&scenario, &SimConfig::default()).unwrap();
        let first = &log.samples[0];
        assert_eq!(first.qd, Vector3::zeros());
        let offset = first.x - scenario.path.eval_clamped(0.0).pos;
        assert_abs_diff_eq!(offset, dev, epsilon = 1e-12);
    }

    #[test]
    fn unstable_feedback_sets_diverged_flag() {
        let gains = TjGains {
            kp: Vector3::repeat(-5e4),
            kd: Vector3::repeat(-500.0),
        };
        let scenario = Scenario {
            deviation: Vector3::new(0.02, 0.0, 0.0),
            ..base_scenario(ControllerSpec::Tj(gains))
        };
        let log = run_closed_loop(&scenario, &SimConfig::default()).unwrap();
        assert!(log.diverged);
        assert!(log.samples.len() < 3001);
        for row in &log.samples {
            assert!(row.q.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn integrator_preserves_rest_without_forces() {
        let mut plant = LegModel::<f64>::default();
        plant.inertial.g = 0.0;
        let state = JointState::at_rest(Vector3::new(0.4, -0.7, 1.1));
        let mut s = state;
        for _ in 0..1000 {
            s = rk4_step(&plant, &s, &Vector3::zeros(), 1e-3);
        }
        assert_abs_diff_eq!(s.q, state.q, epsilon = 1e-14);
        assert_abs_diff_eq!(s.qd, state.qd, epsilon = 1e-14);
    }

    #[test]
    fn integrator_is_fourth_order() {
        let plant = LegModel::<f64>::default();
        let tau = Vector3::new(0.3, 0.8, 0.2);
        let start = JointState::at_rest(Vector3::new(0.2, -0.4, 0.6));
        let advance = |h: f64, steps: usize| {
            let mut s = start;
            for _ in 0..steps {
                s = rk4_step(&plant, &s, &tau, h);
            }
            s
        };
        let fine = advance(1e-5, 10_000);
        let err = |s: &JointState<f64>| {
            ((s.q - fine.q).norm_squared() + (s.qd - fine.qd).norm_squared()).sqrt()
        };
        let e1 = err(&advance(1e-3, 100));
        let e2 = err(&advance(5e-4, 200));
        let ratio = e1 / e2;
        assert!(
            (8.0..40.0).contains(&ratio),
            "expected ~16x error reduction on halving, got {ratio}"
        );
    }

    #[test]
    fn corrected_path_lag_is_bounded_by_filter_group_delay() {
        // a unity-DC second-order filter tracking a moving target lags it by
        // the group delay 2*zeta/omega_n at low frequency, so the corrected
        // path trails the raw path by roughly that delay times the path
        // speed (about 1.1 mm here); it must never exceed that scale, and it
        // must vanish at both ends where the path is at rest
        let ref_model = RefModelParams::<f64>::default();
        let scenario = base_scenario(ControllerSpec::Atj {
            gains: AtjGains::default(),
            ref_model,
        });
        let log = run_closed_loop(&scenario, &SimConfig::default()).unwrap();
        let mut max_dev: f64 = 0.0;
        let mut max_speed: f64 = 0.0;
        for row in &log.samples {
            let Extra::Atj { corrected, .. } = row.extra else {
                panic!("expected adaptive extras")
            };
            max_dev = max_dev.max((corrected - row.x_des).norm());
            max_speed = max_speed.max(scenario.path.eval_clamped(row.t).vel.norm());
        }
        let group_delay = 2.0 * ref_model.zeta / ref_model.omega_n;
        assert!(
            max_dev <= 1.25 * group_delay * max_speed,
            "corrected path deviates {max_dev} vs lag scale {}",
            group_delay * max_speed
        );
        assert!(max_dev >= 0.5 * group_delay * max_speed, "lag should be visible");
        let last = log.samples.last().unwrap();
        let Extra::Atj { corrected, .. } = last.extra else {
            panic!()
        };
        assert_abs_diff_eq!(corrected, last.x_des, epsilon = 1e-4);
    }

    #[test]
    fn smc_switching_gains_precompute_matches_direct_call() {
        let gains = SmcGains::default();
        let scenario = Scenario {
            uncertainty_pct: 15.0,
            ..base_scenario(ControllerSpec::Smc(gains))
        };
        let hat = perturb_model(&scenario.plant, scenario.uncertainty_pct);
        let k = control::switching_gains(&gains, 15.0, &hat, &scenario.path, scenario.branch)
            .unwrap();
        for i in 0..3 {
            assert!(k[i] > gains.eta[i]);
        }
        // the perturbed controller still completes the run
        let log = run_closed_loop(&scenario, &SimConfig::default()).unwrap();
        assert!(!log.diverged);
        assert_eq!(log.samples.len(), 3001);
    }

    #[test]
    fn perturbation_scales_only_inertial_parameters() {
        let model = LegModel::<f64>::default();
        let p = perturb_model(&model, 25.0);
        assert_eq!(p.geom, model.geom);
        assert_relative_eq!(p.inertial.m2, model.inertial.m2 * 1.25, max_relative = 1e-15);
        assert_relative_eq!(p.inertial.i3, model.inertial.i3 * 1.25, max_relative = 1e-15);
        assert_eq!(p.inertial.g, model.inertial.g);
    }
}
