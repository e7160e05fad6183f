use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar bound for everything in this crate.
///
/// `f64` is the supported precision; `f32` satisfies the same bound so the
/// whole pipeline stays compilable at single precision for size/throughput
/// experiments (numeric tolerances in the test suite assume `f64`).
pub trait Real: nalgebra::RealField + Copy + FromPrimitive + ToPrimitive {
    /// Lift an `f64` constant into the scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl<T> Real for T where T: nalgebra::RealField + Copy + FromPrimitive + ToPrimitive {}
