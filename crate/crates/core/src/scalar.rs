use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the matrix layer is generic over (`f32`, `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive {}

/// Lifts an `f64` literal into `R`.
#[inline]
pub fn lit<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("literal representable in scalar type")
}

#[inline]
pub fn to_f64<R: Real>(x: R) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// A tolerance never tighter than what `R` can resolve.
#[inline]
pub fn tol<R: Real>(x: f64) -> R {
    let floor = R::default_epsilon() * lit(64.0);
    let t = lit::<R>(x);
    if t > floor {
        t
    } else {
        floor
    }
}
