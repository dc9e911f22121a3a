//! Scalar abstraction shared by every numerical module.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the geometry and quantum code is generic over.
///
/// Implemented for `f32` and `f64`. Tolerances are written as `f64` literals
/// and converted through [`Real::lit`]; [`Real::tol`] additionally floors a
/// requested tolerance at a few hundred ulps so that `f32` instantiations do
/// not chase precision the type cannot hold.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn tol(x: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(512.0);
        let t = Self::lit(x);
        if t < floor {
            floor
        } else {
            t
        }
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    fn count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
