//! Numerical self-checks on the model and path generator.
//!
//! These back the `validate` command: structural identities the dynamics
//! must satisfy (energy conservation, mass-matrix shape, the Coriolis skew
//! property, Jacobian consistency, kinematic round-trips) plus continuity of
//! the speed profile. Each check reports the worst observed residual against
//! its tolerance.

use nalgebra::{Matrix3, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::leg::{IkBranch, JointState, LegGeometry, LegModel};
use crate::sim::rk4_step;
use crate::traj::TrapezoidProfile;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub tolerance: f64,
    pub observed: f64,
    pub passed: bool,
}

impl CheckReport {
    fn below(name: &'static str, tolerance: f64, observed: f64) -> Self {
        Self {
            name,
            tolerance,
            observed,
            passed: observed < tolerance,
        }
    }
}

fn random_states(n: usize, seed: u64) -> Vec<JointState<f64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| JointState {
            q: Vector3::new(
                rng.gen_range(-3.1..3.1),
                rng.gen_range(-3.1..3.1),
                rng.gen_range(-3.1..3.1),
            ),
            qd: Vector3::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            ),
        })
        .collect()
}

/// Total mechanical energy of the unforced, gravity-free system must be
/// constant; reports the worst drift over 3 s at a 0.1 ms step.
pub fn check_energy_conservation(model: &LegModel<f64>) -> CheckReport {
    let mut m = *model;
    m.inertial.g = 0.0;
    let mut state = JointState {
        q: Vector3::new(0.3, -0.5, 0.7),
        qd: Vector3::new(0.5, -0.3, 0.2),
    };
    let e0 = m.total_energy(&state);
    let h = 1e-4;
    let mut drift: f64 = 0.0;
    for _ in 0..30_000 {
        state = rk4_step(&m, &state, &Vector3::zeros(), h);
        drift = drift.max((m.total_energy(&state) - e0).abs());
    }
    CheckReport::below("energy-conservation", 1e-6, drift)
}

/// Worst asymmetry `max |M - M'|` over random states.
pub fn check_mass_matrix_symmetry(model: &LegModel<f64>) -> CheckReport {
    let mut worst: f64 = 0.0;
    for s in random_states(1000, 11) {
        let m = model.mass_matrix(&s.q);
        let asym = m - m.transpose();
        worst = worst.max(asym.abs().max());
    }
    CheckReport::below("mass-matrix-symmetry", 1e-12, worst)
}

/// Smallest eigenvalue of M over random states; must stay positive.
pub fn check_mass_matrix_positive_definite(model: &LegModel<f64>) -> CheckReport {
    let mut min_eig = f64::INFINITY;
    for s in random_states(1000, 12) {
        let m = model.mass_matrix(&s.q);
        let sym = (m + m.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(sym);
        min_eig = min_eig.min(eig.eigenvalues.min());
    }
    CheckReport {
        name: "mass-matrix-positive-definite",
        tolerance: 0.0,
        observed: min_eig,
        passed: min_eig > 0.0,
    }
}

/// `dM/dt - 2C` must be skew-symmetric; `dM/dt` is taken by central
/// differences along the joint velocity.
pub fn check_coriolis_skew(model: &LegModel<f64>) -> CheckReport {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for s in random_states(1000, 13) {
        let mp = model.mass_matrix(&(s.q + s.qd * h));
        let mm = model.mass_matrix(&(s.q - s.qd * h));
        let mdot = (mp - mm) / (2.0 * h);
        let c = model.coriolis_matrix(&s.q, &s.qd);
        let skew = mdot - c * 2.0;
        let residual = skew + skew.transpose();
        worst = worst.max(residual.abs().max());
    }
    CheckReport::below("coriolis-skew-residual", 1e-9, worst)
}

/// Compare an analytic Jacobian against central differences of the forward
/// kinematics. The Jacobian under test is injectable so the failure path of
/// the report machinery itself can be exercised.
pub fn check_jacobian_vs_fd_with(
    geom: &LegGeometry<f64>,
    jacobian: impl Fn(&Vector3<f64>) -> Matrix3<f64>,
) -> CheckReport {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for s in random_states(1000, 14) {
        let j = jacobian(&s.q);
        let mut fd = Matrix3::zeros();
        for k in 0..3 {
            let mut qp = s.q;
            let mut qm = s.q;
            qp[k] += h;
            qm[k] -= h;
            let col = (geom.forward_kinematics(&qp) - geom.forward_kinematics(&qm)) / (2.0 * h);
            fd.set_column(k, &col);
        }
        worst = worst.max((j - fd).abs().max());
    }
    CheckReport::below("jacobian-vs-fd", 1e-6, worst)
}

pub fn check_jacobian_vs_fd(geom: &LegGeometry<f64>) -> CheckReport {
    check_jacobian_vs_fd_with(geom, |q| geom.jacobian(q))
}

/// Foot positions reached from random interior joint states must invert back
/// to the same position.
pub fn check_fk_ik_roundtrip(geom: &LegGeometry<f64>) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(15);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let q = Vector3::new(
            rng.gen_range(-3.1..3.1),
            rng.gen_range(-1.2..1.2),
            rng.gen_range(-2.4..-0.1),
        );
        let x = geom.forward_kinematics(&q);
        let Ok(sol) = geom.inverse_kinematics(&x, IkBranch::KneeDown) else {
            return CheckReport {
                name: "fk-ik-roundtrip",
                tolerance: 1e-9,
                observed: f64::INFINITY,
                passed: false,
            };
        };
        worst = worst.max((geom.forward_kinematics(&sol.q) - x).norm());
    }
    CheckReport::below("fk-ik-roundtrip", 1e-9, worst)
}

/// Position and speed must agree across the profile's two interior
/// breakpoints when evaluated from the formulas on either side.
pub fn check_trapezoid_continuity(profile: &TrapezoidProfile<f64>) -> CheckReport {
    let (a, ta, tf) = (profile.accel, profile.ramp_time, profile.duration);
    let v = profile.cruise_speed();
    // ramp-up vs cruise at t = ta
    let s_up = 0.5 * a * ta * ta;
    let s_cruise_at_ta = v * ta - v * v / (2.0 * a);
    let dv1 = (a * ta - v).abs();
    // cruise vs ramp-down at t = tf - ta
    let tb = tf - ta;
    let s_cruise_at_tb = v * tb - v * v / (2.0 * a);
    let s_down = v * tf - v * v / a - 0.5 * a * (tb - tf) * (tb - tf);
    let dv2 = (v - a * (tf - tb)).abs();
    let worst = (s_up - s_cruise_at_ta)
        .abs()
        .max((s_cruise_at_tb - s_down).abs())
        .max(dv1)
        .max(dv2);
    CheckReport::below("trapezoid-continuity", 1e-12, worst)
}

/// Total distance must equal the geometric sum of the ramp and cruise
/// segments (an independent arithmetic route).
pub fn check_trapezoid_endpoint(profile: &TrapezoidProfile<f64>) -> CheckReport {
    let (a, ta, tf) = (profile.accel, profile.ramp_time, profile.duration);
    let v = profile.cruise_speed();
    let oracle = a * ta * ta + v * (tf - 2.0 * ta);
    let (s_end, _, _) = profile.eval(tf).unwrap();
    CheckReport::below("trapezoid-endpoint", 1e-15, (s_end - oracle).abs())
}

/// Run every check against the given model and speed profile.
pub fn run_all(model: &LegModel<f64>, profile: &TrapezoidProfile<f64>) -> Vec<CheckReport> {
    vec![
        check_energy_conservation(model),
        check_mass_matrix_symmetry(model),
        check_mass_matrix_positive_definite(model),
        check_coriolis_skew(model),
        check_jacobian_vs_fd(&model.geom),
        check_fk_ik_roundtrip(&model.geom),
        check_trapezoid_continuity(profile),
        check_trapezoid_endpoint(profile),
    ]
}
