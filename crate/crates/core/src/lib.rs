//! Simulation and benchmarking toolkit for trajectory-tracking controllers
//! on a three-joint robot leg.
//!
//! The crate models the leg's kinematics and rigid-body dynamics ([`leg`]),
//! generates swing-foot references ([`traj`]), implements three tracking
//! controllers ([`control`]), integrates the closed loop deterministically
//! ([`sim`]), reduces runs to comparable metrics and parameter sweeps
//! ([`analysis`]), and self-checks the numerics ([`validate`]).
//!
//! Everything numeric is generic over the scalar type through the [`Real`]
//! bound; `f64` is the working precision, and the aliases at the crate root
//! fix it for downstream code.

pub mod analysis;
pub mod control;
pub mod leg;
mod real;
pub mod sim;
pub mod traj;
pub mod validate;

pub use real::Real;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type LegGeometry = leg::LegGeometry<f64>;
pub type LegModel = leg::LegModel<f64>;
pub type TrapezoidProfile = traj::TrapezoidProfile<f64>;
pub type SwingPath = traj::SwingPath<f64>;
pub type SimConfig = sim::SimConfig<f64>;
pub type Scenario = sim::Scenario<f64>;
pub type ControllerSpec = sim::ControllerSpec<f64>;
pub type RunLog = sim::RunLog<f64>;
pub type MetricsRecord = analysis::MetricsRecord<f64>;
pub type SweepRow = analysis::SweepRow<f64>;
