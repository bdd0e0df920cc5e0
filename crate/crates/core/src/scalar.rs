//! Scalar abstraction shared by the material and forward-model code.
//!
//! Everything in [`crate::materials`] and [`crate::dispersion`] is generic
//! over [`Real`]. The tolerances the solver is built around assume `f64`;
//! `f32` instantiations compile and run but resolve velocities to roughly
//! single precision only.

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Real scalar usable by the elastodynamic kernels.
pub trait Real: RealField + Copy + ToPrimitive + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Converts `T` to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
