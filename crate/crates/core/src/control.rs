//! The three tracking controllers.
//!
//! * `smc_torque`: joint-space sliding-mode law with model feedforward and a
//!   smooth boundary-layer switching term.
//! * `tj_torque`: Cartesian PD mapped to joint torques by the Jacobian
//!   transpose; no dynamic model.
//! * `atj_control`: the transpose-Jacobian structure with scalar adaptive
//!   PI gains and a second-order reference model filtering the desired path.

use nalgebra::Vector3;

use crate::leg::{IkBranch, JointState, LegGeometry, LegModel};
use crate::traj::{self, JointReference, PathSample, SwingPath, TrajError};
use crate::Real;

/// Smooth switching function: odd, monotone, saturating at plus/minus one
/// outside a few widths `phi`.
pub fn sigmoid<T: Real>(s: T, phi: T) -> T {
    (s / phi).tanh()
}

/// Sliding-mode gains: surface slope `lambda` (diagonal), reaching rates
/// `eta`, boundary-layer width `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmcGains<T> {
    pub lambda: Vector3<T>,
    pub eta: Vector3<T>,
    pub phi: T,
}

impl<T: Real> Default for SmcGains<T> {
    fn default() -> Self {
        Self {
            lambda: Vector3::repeat(T::of(10.0)),
            eta: Vector3::repeat(T::of(10.0)),
            phi: T::of(0.01),
        }
    }
}

impl<T: Real> SmcGains<T> {
    pub fn validate(&self) -> Result<(), crate::leg::ParamError> {
        let err = |field, reason| Err(crate::leg::ParamError { field, reason });
        if !(self.lambda.min() > T::zero()) {
            return err("smc.lambda", "entries must be strictly positive");
        }
        if !(self.eta.min() > T::zero()) {
            return err("smc.eta", "entries must be strictly positive");
        }
        if !(self.phi > T::zero()) {
            return err("smc.phi", "must be strictly positive");
        }
        Ok(())
    }
}

/// Switching gains sized for the configured model mismatch: the reaching
/// rates plus a bound on the per-axis force mismatch `|V + G|` sampled along
/// the reference, scaled by the uncertainty percentage. With a nominal model
/// the bound is zero and the gains equal `eta`.
pub fn switching_gains<T: Real>(
    gains: &SmcGains<T>,
    uncertainty_pct: T,
    model: &LegModel<T>,
    path: &SwingPath<T>,
    branch: IkBranch,
) -> Result<Vector3<T>, TrajError> {
    if uncertainty_pct <= T::zero() {
        return Ok(gains.eta);
    }
    const SAMPLES: usize = 300;
    let mut fmax: Vector3<T> = Vector3::zeros();
    for k in 0..=SAMPLES {
        let t = path.profile.duration * T::of(k as f64 / SAMPLES as f64);
        let r = traj::joint_reference(path, &model.geom, branch, t)?;
        let vg = model.coriolis_matrix(&r.q, &r.qd) * r.qd + model.gravity(&r.q);
        fmax = fmax.zip_map(&vg, |m, x| m.max(x.abs()));
    }
    Ok(gains.eta + fmax * (uncertainty_pct / T::of(100.0)))
}

/// Sliding-mode torque. Returns the torque and the sliding surface value.
///
/// The surface is `s = (qd - qd_ref) + lambda (q - q_ref)`; the law drives
/// `s` to the boundary layer with the switching acceleration folded through
/// the model's mass matrix, on top of the computed-torque feedforward:
/// `tau = M (qdd_ref - lambda ed - k tanh(s/phi)) + V + G`.
pub fn smc_torque<T: Real>(
    model: &LegModel<T>,
    gains: &SmcGains<T>,
    k: &Vector3<T>,
    state: &JointState<T>,
    reference: &JointReference<T>,
) -> (Vector3<T>, Vector3<T>) {
    let e = state.q - reference.q;
    let ed = state.qd - reference.qd;
    let s = ed + gains.lambda.component_mul(&e);
    let switch = k.component_mul(&s.map(|si| sigmoid(si, gains.phi)));
    let accel = reference.qdd - gains.lambda.component_mul(&ed) - switch;
    let m = model.mass_matrix(&state.q);
    let v = model.coriolis_matrix(&state.q, &state.qd) * state.qd;
    let g = model.gravity(&state.q);
    (m * accel + v + g, s)
}

/// Cartesian PD gains for the transpose-Jacobian law (diagonals).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TjGains<T> {
    pub kp: Vector3<T>,
    pub kd: Vector3<T>,
}

impl<T: Real> Default for TjGains<T> {
    fn default() -> Self {
        Self {
            kp: Vector3::repeat(T::of(700.0)),
            kd: Vector3::repeat(T::of(7.0)),
        }
    }
}

impl<T: Real> TjGains<T> {
    pub fn validate(&self) -> Result<(), crate::leg::ParamError> {
        let err = |field, reason| Err(crate::leg::ParamError { field, reason });
        if !(self.kp.min() > T::zero()) {
            return err("tj.kp", "entries must be strictly positive");
        }
        if !(self.kd.min() > T::zero()) {
            return err("tj.kd", "entries must be strictly positive");
        }
        Ok(())
    }
}

/// Transpose-Jacobian torque: Cartesian spring-damper force on the tracking
/// error, mapped to joint space by the Jacobian transpose.
pub fn tj_torque<T: Real>(
    geom: &LegGeometry<T>,
    gains: &TjGains<T>,
    state: &JointState<T>,
    target_pos: &Vector3<T>,
    target_vel: &Vector3<T>,
) -> Vector3<T> {
    let j = geom.jacobian(&state.q);
    let e = target_pos - geom.forward_kinematics(&state.q);
    let ed = target_vel - j * state.qd;
    j.transpose() * (gains.kd.component_mul(&ed) + gains.kp.component_mul(&e))
}

/// Second-order reference-model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefModelParams<T> {
    pub omega_n: T,
    pub zeta: T,
}

impl<T: Real> Default for RefModelParams<T> {
    fn default() -> Self {
        Self {
            omega_n: T::of(100.0),
            zeta: T::of(0.9),
        }
    }
}

impl<T: Real> RefModelParams<T> {
    pub fn validate(&self) -> Result<(), crate::leg::ParamError> {
        let err = |field, reason| Err(crate::leg::ParamError { field, reason });
        if !(self.omega_n > T::zero()) {
            return err("atj.omega_n", "must be strictly positive");
        }
        if !(self.zeta > T::zero() && self.zeta <= T::one()) {
            return err("atj.zeta", "must be in (0, 1]");
        }
        Ok(())
    }
}

/// Advance the per-axis critically-filtered tracker
/// `y' = v, v' = omega_n^2 (u - y) - 2 zeta omega_n v`
/// by one classical Runge-Kutta step of size `dt`.
pub fn ref_model_step<T: Real>(
    p: &RefModelParams<T>,
    input: &Vector3<T>,
    pos: &Vector3<T>,
    vel: &Vector3<T>,
    dt: T,
) -> (Vector3<T>, Vector3<T>) {
    let wn2 = p.omega_n * p.omega_n;
    let damp = T::of(2.0) * p.zeta * p.omega_n;
    let f = |y: &Vector3<T>, v: &Vector3<T>| -> (Vector3<T>, Vector3<T>) {
        (*v, (input - y) * wn2 - v * damp)
    };
    let half = T::of(0.5);
    let sixth = T::one() / T::of(6.0);
    let two = T::of(2.0);
    let (k1y, k1v) = f(pos, vel);
    let (k2y, k2v) = f(&(pos + k1y * (half * dt)), &(vel + k1v * (half * dt)));
    let (k3y, k3v) = f(&(pos + k2y * (half * dt)), &(vel + k2v * (half * dt)));
    let (k4y, k4v) = f(&(pos + k3y * dt), &(vel + k3v * dt));
    (
        pos + (k1y + k2y * two + k3y * two + k4y) * (dt * sixth),
        vel + (k1v + k2v * two + k3v * two + k4v) * (dt * sixth),
    )
}

/// Adaptation parameters: quadratic-form weights (diagonals) for the
/// proportional and integral parts of each gain, and integral leakage rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtjGains<T> {
    pub gamma_pp: Vector3<T>,
    pub gamma_pi: Vector3<T>,
    pub gamma_dp: Vector3<T>,
    pub gamma_di: Vector3<T>,
    pub delta_p: T,
    pub delta_d: T,
}

impl<T: Real> Default for AtjGains<T> {
    fn default() -> Self {
        let gp = Vector3::new(T::of(20000.0), T::of(20000.0), T::of(40000.0));
        let gd = Vector3::new(T::of(300.0), T::of(3000.0), T::of(200.0));
        Self {
            gamma_pp: gp,
            gamma_pi: gp,
            gamma_dp: gd,
            gamma_di: gd,
            delta_p: T::of(0.04),
            delta_d: T::of(0.04),
        }
    }
}

impl<T: Real> AtjGains<T> {
    pub fn validate(&self) -> Result<(), crate::leg::ParamError> {
        let err = |field, reason| Err(crate::leg::ParamError { field, reason });
        for (field, v) in [
            ("atj.gamma_pp", self.gamma_pp),
            ("atj.gamma_pi", self.gamma_pi),
            ("atj.gamma_dp", self.gamma_dp),
            ("atj.gamma_di", self.gamma_di),
        ] {
            if !(v.min() > T::zero()) {
                return err(field, "entries must be strictly positive");
            }
        }
        if !(self.delta_p > T::zero()) {
            return err("atj.delta_p", "must be strictly positive");
        }
        if !(self.delta_d > T::zero()) {
            return err("atj.delta_d", "must be strictly positive");
        }
        Ok(())
    }
}

/// Mutable controller memory: the two integral-gain accumulators and the
/// reference-model filter state (corrected path position and rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtjState<T> {
    pub k_pi: T,
    pub k_di: T,
    pub ref_pos: Vector3<T>,
    pub ref_vel: Vector3<T>,
}

impl<T: Real> AtjState<T> {
    /// Start with empty accumulators and the filter converged at the path's
    /// initial point, so the corrected path begins exactly at the desired
    /// start.
    pub fn init(path_start: Vector3<T>) -> Self {
        Self {
            k_pi: T::zero(),
            k_di: T::zero(),
            ref_pos: path_start,
            ref_vel: Vector3::zeros(),
        }
    }
}

/// One exact step of the leaky-integral gain recursion:
/// `K_I(t) = f * dt/(1 + delta dt) + K_I(t - dt)/(1 + delta dt)` with forcing
/// `f = e' Gamma e`, plus the instantaneous quadratic term. Returns the two
/// scalar gains and the updated accumulators `(k_p, k_d, k_pi, k_di)`.
pub fn atj_update_gains<T: Real>(
    gains: &AtjGains<T>,
    e: &Vector3<T>,
    ed: &Vector3<T>,
    dt: T,
    k_pi_prev: T,
    k_di_prev: T,
) -> (T, T, T, T) {
    let quad = |w: &Vector3<T>, x: &Vector3<T>| w.component_mul(x).dot(x);
    let den_p = T::one() + gains.delta_p * dt;
    let den_d = T::one() + gains.delta_d * dt;
    let k_pi = quad(&gains.gamma_pi, e) * dt / den_p + k_pi_prev / den_p;
    let k_di = quad(&gains.gamma_di, ed) * dt / den_d + k_di_prev / den_d;
    let k_p = quad(&gains.gamma_pp, e) + k_pi;
    let k_d = quad(&gains.gamma_dp, ed) + k_di;
    (k_p, k_d, k_pi, k_di)
}

/// Per-tick byproducts of the adaptive controller, kept for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtjTickInfo<T> {
    pub corrected_pos: Vector3<T>,
    pub corrected_vel: Vector3<T>,
    pub k_p: T,
    pub k_d: T,
}

/// Adaptive transpose-Jacobian step. Filters the raw target through the
/// reference model, forms the Cartesian errors against the corrected path,
/// updates the adaptive gains, and returns the torque plus the new state.
pub fn atj_control<T: Real>(
    state: &JointState<T>,
    raw_target: &PathSample<T>,
    geom: &LegGeometry<T>,
    gains: &AtjGains<T>,
    ref_model: &RefModelParams<T>,
    st: &AtjState<T>,
    dt: T,
) -> (Vector3<T>, AtjTickInfo<T>, AtjState<T>) {
    let (ref_pos, ref_vel) = ref_model_step(ref_model, &raw_target.pos, &st.ref_pos, &st.ref_vel, dt);
    let j = geom.jacobian(&state.q);
    let e = ref_pos - geom.forward_kinematics(&state.q);
    let ed = ref_vel - j * state.qd;
    let (k_p, k_d, k_pi, k_di) = atj_update_gains(gains, &e, &ed, dt, st.k_pi, st.k_di);
    let tau = j.transpose() * (ed * k_d + e * k_p);
    (
        tau,
        AtjTickInfo {
            corrected_pos: ref_pos,
            corrected_vel: ref_vel,
            k_p,
            k_d,
        },
        AtjState {
            k_pi,
            k_di,
            ref_pos,
            ref_vel,
        },
    )
}
