//! Kinematics and rigid-body dynamics of the three-link leg.
//!
//! The chain is a yaw hip joint (axis +z) followed by two pitch joints
//! (knee and ankle). With all angles zero the leg is stretched horizontally:
//! the foot sits at `(l2 + l3, l1, 0)` in the base frame, gravity acts along
//! `-z`. All closed forms below were generated offline from the Lagrangian of
//! this chain and are cross-checked end to end by the property suite
//! (energy conservation, skew-symmetry, gradient and finite-difference
//! oracles).

use nalgebra::{Matrix3, Vector3};

use crate::Real;

/// Link lengths and center-of-mass offsets along each link, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegGeometry<T> {
    pub l1: T,
    pub l2: T,
    pub l3: T,
    pub lc1: T,
    pub lc2: T,
    pub lc3: T,
}

/// Link masses, scalar inertias about each link's COM bending axis, and
/// gravitational acceleration (acting along `-z` of the base frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegInertial<T> {
    pub m1: T,
    pub m2: T,
    pub m3: T,
    pub i1: T,
    pub i2: T,
    pub i3: T,
    pub g: T,
}

/// Full plant description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegModel<T> {
    pub geom: LegGeometry<T>,
    pub inertial: LegInertial<T>,
}

impl<T: Real> Default for LegGeometry<T> {
    fn default() -> Self {
        Self {
            l1: T::of(0.12),
            l2: T::of(0.36),
            l3: T::of(0.36),
            lc1: T::of(0.060),
            lc2: T::of(0.180),
            lc3: T::of(0.175),
        }
    }
}

impl<T: Real> Default for LegInertial<T> {
    fn default() -> Self {
        Self {
            m1: T::of(0.10),
            m2: T::of(0.30),
            m3: T::of(0.15),
            i1: T::of(1.20e-4),
            i2: T::of(3.24e-3),
            i3: T::of(1.62e-3),
            g: T::of(9.81),
        }
    }
}

impl<T: Real> Default for LegModel<T> {
    fn default() -> Self {
        Self {
            geom: LegGeometry::default(),
            inertial: LegInertial::default(),
        }
    }
}

/// A parameter failed its domain invariant. `field` names the offending
/// parameter in `section.name` form.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{field}: {reason}")]
pub struct ParamError {
    pub field: &'static str,
    pub reason: &'static str,
}

impl<T: Real> LegGeometry<T> {
    pub fn validate(&self) -> Result<(), ParamError> {
        let err = |field, reason| Err(ParamError { field, reason });
        let pos = [
            ("leg.l1", self.l1),
            ("leg.l2", self.l2),
            ("leg.l3", self.l3),
            ("leg.lc1", self.lc1),
            ("leg.lc2", self.lc2),
            ("leg.lc3", self.lc3),
        ];
        for (field, v) in pos {
            if !(v > T::zero()) {
                return err(field, "must be strictly positive");
            }
        }
        for (field, lc, l) in [
            ("leg.lc1", self.lc1, self.l1),
            ("leg.lc2", self.lc2, self.l2),
            ("leg.lc3", self.lc3, self.l3),
        ] {
            if lc > l {
                return err(field, "COM offset exceeds link length");
            }
        }
        Ok(())
    }
}

impl<T: Real> LegInertial<T> {
    pub fn validate(&self) -> Result<(), ParamError> {
        let err = |field, reason| Err(ParamError { field, reason });
        let pos = [
            ("leg.m1", self.m1),
            ("leg.m2", self.m2),
            ("leg.m3", self.m3),
            ("leg.i1", self.i1),
            ("leg.i2", self.i2),
            ("leg.i3", self.i3),
        ];
        for (field, v) in pos {
            if !(v > T::zero()) {
                return err(field, "must be strictly positive");
            }
        }
        if self.g < T::zero() {
            return err("leg.g", "must be non-negative");
        }
        Ok(())
    }
}

/// Joint angles and rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState<T> {
    pub q: Vector3<T>,
    pub qd: Vector3<T>,
}

impl<T: Real> JointState<T> {
    pub fn at_rest(q: Vector3<T>) -> Self {
        Self {
            q,
            qd: Vector3::zeros(),
        }
    }
}

/// Mass matrix and generalized velocity-product / gravity forces at a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsTerms<T> {
    pub m: Matrix3<T>,
    pub v: Vector3<T>,
    pub g: Vector3<T>,
}

/// Knee configuration selector for the closed-form IK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IkBranch {
    /// Ankle angle non-positive (knee folded downward). The benchmark default.
    #[default]
    KneeDown,
    /// Ankle angle non-negative.
    KneeUp,
}

impl IkBranch {
    fn sign<T: Real>(self) -> T {
        match self {
            IkBranch::KneeDown => -T::one(),
            IkBranch::KneeUp => T::one(),
        }
    }
}

/// IK result. `near_singular` flags targets within 1e-6 m of a workspace
/// boundary (full extension, full fold, or the hip axis cylinder), where the
/// joint-rate maps degrade; the solution itself is still exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution<T> {
    pub q: Vector3<T>,
    pub near_singular: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KinError {
    #[error("target ({x}, {y}, {z}) m is outside the reachable workspace")]
    Unreachable { x: f64, y: f64, z: f64 },
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let pi = T::pi();
    let two_pi = T::two_pi();
    let x = -a + pi;
    let w = x - (x / two_pi).floor() * two_pi;
    -(w - pi)
}

impl<T: Real> LegGeometry<T> {
    /// Foot-tip position in the base frame.
    pub fn forward_kinematics(&self, q: &Vector3<T>) -> Vector3<T> {
        let (s1, c1) = q[0].sin_cos();
        let (s2, c2) = q[1].sin_cos();
        let (s23, c23) = (q[1] + q[2]).sin_cos();
        let r = self.l2 * c2 + self.l3 * c23;
        Vector3::new(
            -self.l1 * s1 + r * c1,
            self.l1 * c1 + r * s1,
            self.l2 * s2 + self.l3 * s23,
        )
    }

    /// Partial derivatives of the foot-tip position w.r.t. the joint angles.
    pub fn jacobian(&self, q: &Vector3<T>) -> Matrix3<T> {
        let (s1, c1) = q[0].sin_cos();
        let (s2, c2) = q[1].sin_cos();
        let (s23, c23) = (q[1] + q[2]).sin_cos();
        let r = self.l2 * c2 + self.l3 * c23; // planar radius
        let dr2 = -self.l2 * s2 - self.l3 * s23; // dr/dtheta2
        let dr3 = -self.l3 * s23; // dr/dtheta3
        Matrix3::new(
            -self.l1 * c1 - r * s1,
            dr2 * c1,
            dr3 * c1,
            -self.l1 * s1 + r * c1,
            dr2 * s1,
            dr3 * s1,
            T::zero(),
            self.l2 * c2 + self.l3 * c23,
            self.l3 * c23,
        )
    }

    /// Closed-form inverse kinematics.
    ///
    /// The target is reachable when it lies outside the hip-axis cylinder of
    /// radius `l1` and the remaining planar/vertical distance fits inside the
    /// knee-ankle annulus `[|l2 - l3|, l2 + l3]`. Output angles are wrapped
    /// to `(-pi, pi]` and the ankle angle's sign follows `branch`.
    pub fn inverse_kinematics(
        &self,
        p: &Vector3<T>,
        branch: IkBranch,
    ) -> Result<IkSolution<T>, KinError> {
        let unreachable = || KinError::Unreachable {
            x: p[0].as_f64(),
            y: p[1].as_f64(),
            z: p[2].as_f64(),
        };
        let (x, y, z) = (p[0], p[1], p[2]);
        let rho2 = x * x + y * y - self.l1 * self.l1;
        if rho2 < T::zero() {
            return Err(unreachable());
        }
        let a = rho2.sqrt();
        let th1 = y.atan2(x) - self.l1.atan2(a);
        let d2 = a * a + z * z;
        let c3 = (d2 - self.l2 * self.l2 - self.l3 * self.l3)
            / (T::of(2.0) * self.l2 * self.l3);
        if c3.abs() > T::one() {
            return Err(unreachable());
        }
        let th3 = branch.sign::<T>() * c3.acos();
        let s3 = th3.sin();
        let th2 = z.atan2(a) - (self.l3 * s3).atan2(self.l2 + self.l3 * c3);

        let r = d2.sqrt();
        let margin = T::of(1e-6);
        let near_singular = (self.l2 + self.l3) - r < margin
            || r - (self.l2 - self.l3).abs() < margin
            || a < margin;
        Ok(IkSolution {
            q: Vector3::new(wrap_angle(th1), wrap_angle(th2), wrap_angle(th3)),
            near_singular,
        })
    }
}

impl<T: Real> LegModel<T> {
    pub fn validate(&self) -> Result<(), ParamError> {
        self.geom.validate()?;
        self.inertial.validate()
    }

    /// Joint-space mass matrix.
    pub fn mass_matrix(&self, q: &Vector3<T>) -> Matrix3<T> {
        let LegGeometry {
            l1,
            l2,
            lc1,
            lc2,
            lc3,
            ..
        } = self.geom;
        let LegInertial {
            m1,
            m2,
            m3,
            i1,
            i2,
            i3,
            ..
        } = self.inertial;
        let two = T::of(2.0);
        let (s2, c2) = q[1].sin_cos();
        let c3 = q[2].cos();
        let (s23, c23) = (q[1] + q[2]).sin_cos();
        let r2 = lc2 * c2; // COM2 planar radius beyond the hip offset
        let r3 = l2 * c2 + lc3 * c23; // COM3 planar radius beyond the hip offset
        let m11 = i1 + m1 * lc1 * lc1 + m2 * (l1 * l1 + r2 * r2) + m3 * (l1 * l1 + r3 * r3);
        let m12 = l1 * (m2 * lc2 * s2 + m3 * (l2 * s2 + lc3 * s23));
        let m13 = l1 * m3 * lc3 * s23;
        let m22 = i2 + i3 + m2 * lc2 * lc2 + m3 * (l2 * l2 + two * l2 * lc3 * c3 + lc3 * lc3);
        let m23 = i3 + m3 * lc3 * (l2 * c3 + lc3);
        let m33 = i3 + m3 * lc3 * lc3;
        Matrix3::new(m11, m12, m13, m12, m22, m23, m13, m23, m33)
    }

    /// Velocity-product (Christoffel) matrix `C` with `V = C * qd` and
    /// `dM/dt - 2C` skew-symmetric.
    pub fn coriolis_matrix(&self, q: &Vector3<T>, qd: &Vector3<T>) -> Matrix3<T> {
        let LegGeometry {
            l1, l2, lc2, lc3, ..
        } = self.geom;
        let LegInertial { m2, m3, .. } = self.inertial;
        let two = T::of(2.0);
        let half = T::of(0.5);
        let (w1, w2, w3) = (qd[0], qd[1], qd[2]);
        let c2 = q[1].cos();
        let s3 = q[2].sin();
        let c23 = (q[1] + q[2]).cos();
        let s2x2 = (two * q[1]).sin();
        let s223 = (two * q[1] + q[2]).sin();
        let s2x23 = (two * (q[1] + q[2])).sin();
        // recurring velocity-product groups
        let ha = (m2 * lc2 * lc2 + m3 * l2 * l2) * s2x2 * half
            + m3 * l2 * lc3 * s223
            + m3 * lc3 * lc3 * s2x23 * half;
        let hb = m3 * l2 * lc3 * (s3 + s223) * half + m3 * lc3 * lc3 * s2x23 * half;
        let hc = l1 * (m2 * lc2 * c2 + m3 * (l2 * c2 + lc3 * c23));
        let hd = l1 * m3 * lc3 * c23;
        let he = m3 * l2 * lc3 * s3;
        Matrix3::new(
            -ha * w2 - hb * w3,
            -ha * w1 + hc * w2 + hd * w3,
            -hb * w1 + hd * (w2 + w3),
            ha * w1,
            -he * w3,
            -he * (w2 + w3),
            hb * w1,
            he * w2,
            T::zero(),
        )
    }

    /// Generalized gravity forces. The yaw joint never works against gravity,
    /// so the first component is identically zero.
    pub fn gravity(&self, q: &Vector3<T>) -> Vector3<T> {
        let LegGeometry { l2, lc2, lc3, .. } = self.geom;
        let LegInertial { m2, m3, g, .. } = self.inertial;
        let c2 = q[1].cos();
        let c23 = (q[1] + q[2]).cos();
        let g2 = g * ((m2 * lc2 + m3 * l2) * c2 + m3 * lc3 * c23);
        let g3 = g * m3 * lc3 * c23;
        Vector3::new(T::zero(), g2, g3)
    }

    /// Mass matrix plus velocity-product and gravity force vectors.
    pub fn dynamics_terms(&self, state: &JointState<T>) -> DynamicsTerms<T> {
        DynamicsTerms {
            m: self.mass_matrix(&state.q),
            v: self.coriolis_matrix(&state.q, &state.qd) * state.qd,
            g: self.gravity(&state.q),
        }
    }

    /// Joint accelerations under applied torque and an optional foot-tip
    /// force (zero throughout the swing-phase benchmark).
    pub fn forward_dynamics(
        &self,
        state: &JointState<T>,
        tau: &Vector3<T>,
        tip_force: &Vector3<T>,
    ) -> Vector3<T> {
        let terms = self.dynamics_terms(state);
        let mut rhs = tau - terms.v - terms.g;
        if *tip_force != Vector3::zeros() {
            rhs += self.geom.jacobian(&state.q).transpose() * tip_force;
        }
        terms
            .m
            .lu()
            .solve(&rhs)
            .expect("mass matrix is positive definite")
    }

    /// COM positions of the three links.
    pub fn com_positions(&self, q: &Vector3<T>) -> [Vector3<T>; 3] {
        let LegGeometry {
            l1,
            l2,
            lc1,
            lc2,
            lc3,
            ..
        } = self.geom;
        let (s1, c1) = q[0].sin_cos();
        let (s2, c2) = q[1].sin_cos();
        let (s23, c23) = (q[1] + q[2]).sin_cos();
        let c_1 = Vector3::new(-lc1 * s1, lc1 * c1, T::zero());
        let hip = Vector3::new(-l1 * s1, l1 * c1, T::zero());
        let u2 = Vector3::new(c1 * c2, s1 * c2, s2);
        let u3 = Vector3::new(c1 * c23, s1 * c23, s23);
        let c_2 = hip + u2 * lc2;
        let c_3 = hip + u2 * l2 + u3 * lc3;
        [c_1, c_2, c_3]
    }

    /// COM translational Jacobians of the three links.
    pub fn com_jacobians(&self, q: &Vector3<T>) -> [Matrix3<T>; 3] {
        let LegGeometry {
            l1,
            l2,
            lc1,
            lc2,
            lc3,
            ..
        } = self.geom;
        let z = T::zero();
        let (s1, c1) = q[0].sin_cos();
        let (s2, c2) = q[1].sin_cos();
        let (s23, c23) = (q[1] + q[2]).sin_cos();
        let j1 = Matrix3::new(-lc1 * c1, z, z, -lc1 * s1, z, z, z, z, z);
        let r2 = lc2 * c2;
        let j2 = Matrix3::new(
            -l1 * c1 - r2 * s1,
            -lc2 * s2 * c1,
            z,
            -l1 * s1 + r2 * c1,
            -lc2 * s2 * s1,
            z,
            z,
            lc2 * c2,
            z,
        );
        let r3 = l2 * c2 + lc3 * c23;
        let dr2 = -l2 * s2 - lc3 * s23;
        let dr3 = -lc3 * s23;
        let j3 = Matrix3::new(
            -l1 * c1 - r3 * s1,
            dr2 * c1,
            dr3 * c1,
            -l1 * s1 + r3 * c1,
            dr2 * s1,
            dr3 * s1,
            z,
            l2 * c2 + lc3 * c23,
            lc3 * c23,
        );
        [j1, j2, j3]
    }

    /// Kinetic energy, computed through the COM Jacobians rather than the
    /// mass matrix so the two routes cross-check each other.
    pub fn kinetic_energy(&self, state: &JointState<T>) -> T {
        let half = T::of(0.5);
        let [j1, j2, j3] = self.com_jacobians(&state.q);
        let (v1, v2, v3) = (j1 * state.qd, j2 * state.qd, j3 * state.qd);
        let LegInertial {
            m1,
            m2,
            m3,
            i1,
            i2,
            i3,
            ..
        } = self.inertial;
        let w2 = state.qd[1];
        let w23 = state.qd[1] + state.qd[2];
        let trans = m1 * v1.dot(&v1) + m2 * v2.dot(&v2) + m3 * v3.dot(&v3);
        let rot = i1 * state.qd[0] * state.qd[0] + i2 * w2 * w2 + i3 * w23 * w23;
        half * (trans + rot)
    }

    /// Potential energy with datum at the base-frame origin height.
    pub fn potential_energy(&self, q: &Vector3<T>) -> T {
        let [c1, c2, c3] = self.com_positions(q);
        self.inertial.g
            * (self.inertial.m1 * c1[2] + self.inertial.m2 * c2[2] + self.inertial.m3 * c3[2])
    }

    pub fn total_energy(&self, state: &JointState<T>) -> T {
        self.kinetic_energy(state) + self.potential_energy(&state.q)
    }
}
