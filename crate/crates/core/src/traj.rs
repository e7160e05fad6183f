//! Swing-foot trajectory generation: a trapezoidal arc-length profile driving
//! a semi-elliptical Cartesian arc, with exact analytic derivatives, plus the
//! joint-space reference used by the model-based controller.

use nalgebra::Vector3;

use crate::leg::{IkBranch, KinError, LegGeometry};
use crate::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajError {
    #[error("time {t} s outside the profile domain [0, {t_f}] s")]
    OutOfDomain { t: f64, t_f: f64 },
    #[error(transparent)]
    Unreachable(#[from] KinError),
    #[error("jacobian is singular along the reference (|det| < 1e-9)")]
    SingularJacobian,
}

/// Arc-length profile: accelerate at `accel` for `ramp_time`, cruise, then
/// decelerate symmetrically, covering the full arc in `duration`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidProfile<T> {
    pub accel: T,
    pub ramp_time: T,
    pub duration: T,
}

impl<T: Real> Default for TrapezoidProfile<T> {
    fn default() -> Self {
        Self {
            accel: T::of(0.1),
            ramp_time: T::of(0.5),
            duration: T::of(3.0),
        }
    }
}

impl<T: Real> TrapezoidProfile<T> {
    pub fn validate(&self) -> Result<(), crate::leg::ParamError> {
        let err = |field, reason| Err(crate::leg::ParamError { field, reason });
        if !(self.accel > T::zero()) {
            return err("path.accel", "must be strictly positive");
        }
        if !(self.ramp_time > T::zero()) {
            return err("path.ramp_time", "must be strictly positive");
        }
        if self.ramp_time > self.duration / T::of(2.0) {
            return err("path.ramp_time", "must not exceed half the duration");
        }
        Ok(())
    }

    /// Cruise speed reached at the end of the ramp.
    pub fn cruise_speed(&self) -> T {
        self.accel * self.ramp_time
    }

    /// Total arc length covered over the full duration.
    pub fn total(&self) -> T {
        let v = self.cruise_speed();
        v * self.duration - v * v / self.accel
    }

    /// Arc length and its first two time derivatives at `t`.
    pub fn eval(&self, t: T) -> Result<(T, T, T), TrajError> {
        if !(t >= T::zero() && t <= self.duration) {
            return Err(TrajError::OutOfDomain {
                t: t.as_f64(),
                t_f: self.duration.as_f64(),
            });
        }
        let (a, ta, tf) = (self.accel, self.ramp_time, self.duration);
        let v = self.cruise_speed();
        let half = T::of(0.5);
        Ok(if t < ta {
            (half * a * t * t, a * t, a)
        } else if t <= tf - ta {
            (v * t - v * v / (T::of(2.0) * a), v, T::zero())
        } else {
            (
                v * tf - v * v / a - half * a * (t - tf) * (t - tf),
                -a * (t - tf),
                -a,
            )
        })
    }
}

/// One point of the Cartesian reference with consistent derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample<T> {
    pub t: T,
    pub pos: Vector3<T>,
    pub vel: Vector3<T>,
    pub acc: Vector3<T>,
}

/// Semi-elliptical swing arc of horizontal extent `step_length` and apex
/// height `step_height` above `center`, traversed by the trapezoid profile.
/// The arc starts at `center - (step_length/2, 0, 0)`, rises to the apex and
/// lands at `center + (step_length/2, 0, 0)`, at rest at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingPath<T> {
    pub step_length: T,
    pub step_height: T,
    pub center: Vector3<T>,
    pub profile: TrapezoidProfile<T>,
}

impl<T: Real> Default for SwingPath<T> {
    fn default() -> Self {
        Self {
            step_length: T::of(0.1),
            step_height: T::of(0.05),
            center: Vector3::new(T::of(-0.6), T::of(0.12), T::of(-0.1)),
            profile: TrapezoidProfile::default(),
        }
    }
}

impl<T: Real> SwingPath<T> {
    pub fn validate(&self) -> Result<(), crate::leg::ParamError> {
        let err = |field, reason| Err(crate::leg::ParamError { field, reason });
        if !(self.step_length > T::zero()) {
            return err("path.step_length", "must be strictly positive");
        }
        if !(self.step_height > T::zero()) {
            return err("path.step_height", "must be strictly positive");
        }
        self.profile.validate()
    }

    /// Verify every point of the arc is reachable, on a dense time grid.
    pub fn check_reachable(&self, geom: &LegGeometry<T>, branch: IkBranch) -> Result<(), TrajError> {
        const GRID: usize = 3000;
        for k in 0..=GRID {
            let t = self.profile.duration * T::of(k as f64 / GRID as f64);
            let sample = self.eval(t)?;
            geom.inverse_kinematics(&sample.pos, branch)?;
        }
        Ok(())
    }

    /// Position, velocity and acceleration at `t` by exact chain rule
    /// through the arc-length profile.
    pub fn eval(&self, t: T) -> Result<PathSample<T>, TrajError> {
        let (s, sd, sdd) = self.profile.eval(t)?;
        let pi = T::pi();
        let s_total = self.profile.total();
        let phi = pi * (T::one() - s / s_total);
        let phid = -pi * sd / s_total;
        let phidd = -pi * sdd / s_total;
        let (sp, cp) = phi.sin_cos();
        let half_s = self.step_length * T::of(0.5);
        let h = self.step_height;
        let pos = Vector3::new(
            self.center[0] + half_s * cp,
            self.center[1],
            self.center[2] + h * sp,
        );
        let vel = Vector3::new(-half_s * sp * phid, T::zero(), h * cp * phid);
        let acc = Vector3::new(
            -half_s * (cp * phid * phid + sp * phidd),
            T::zero(),
            h * (-sp * phid * phid + cp * phidd),
        );
        Ok(PathSample { t, pos, vel, acc })
    }

    /// `eval` with the time clamped into the profile domain, so ticks that
    /// land a rounding error beyond the end hold the terminal rest point.
    pub fn eval_clamped(&self, t: T) -> PathSample<T> {
        let tc = t.max(T::zero()).min(self.profile.duration);
        self.eval(tc).expect("clamped time is in domain")
    }
}

/// Joint-space desired position, rate and acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointReference<T> {
    pub q: Vector3<T>,
    pub qd: Vector3<T>,
    pub qdd: Vector3<T>,
}

/// Map a path sample to joint space: position by IK, rate by the inverse
/// Jacobian, acceleration by the inverse Jacobian with the Jacobian's time
/// derivative taken by central finite difference along the reference.
pub fn joint_reference<T: Real>(
    path: &SwingPath<T>,
    geom: &LegGeometry<T>,
    branch: IkBranch,
    t: T,
) -> Result<JointReference<T>, TrajError> {
    let sample = path.eval(t)?;
    let q = geom.inverse_kinematics(&sample.pos, branch)?.q;
    let j = geom.jacobian(&q);
    if j.determinant().abs() < T::of(1e-9) {
        return Err(TrajError::SingularJacobian);
    }
    let lu = j.lu();
    let qd = lu.solve(&sample.vel).ok_or(TrajError::SingularJacobian)?;

    let h = T::of(1e-5);
    let t_lo = (t - h).max(T::zero());
    let t_hi = (t + h).min(path.profile.duration);
    let jac_at = |tt: T| -> Result<_, TrajError> {
        let p = path.eval(tt)?.pos;
        Ok(geom.jacobian(&geom.inverse_kinematics(&p, branch)?.q))
    };
    let jdot = (jac_at(t_hi)? - jac_at(t_lo)?) / (t_hi - t_lo);
    let qdd = lu
        .solve(&(sample.acc - jdot * qd))
        .ok_or(TrajError::SingularJacobian)?;
    Ok(JointReference { q, qd, qdd })
}
