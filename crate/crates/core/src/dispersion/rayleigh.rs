use crate::materials::IsotropicMaterial;
use crate::scalar::{lit, Real};

/// Rayleigh velocity of an isotropic half-space from the classical secular
/// equation `(2 - x)^2 = 4 sqrt(1 - kappa x) sqrt(1 - x)`, `x = v^2 / vt^2`,
/// `kappa = vt^2 / vl^2`, solved by bisection on the subsonic branch.
pub fn rayleigh_velocity_isotropic<T: Real>(m: &IsotropicMaterial<T>) -> T {
    let vt = m.shear_velocity();
    let vl = m.longitudinal_velocity();
    let kappa = (vt / vl) * (vt / vl);
    let two: T = lit(2.0);
    let four: T = lit(4.0);
    // f(0) = 0 with f < 0 just above it, f(1) = 1.
    let f = |x: T| (two - x) * (two - x) - four * ((T::one() - kappa * x) * (T::one() - x)).sqrt();
    let mut lo: T = lit(1e-3);
    let mut hi = T::one();
    for _ in 0..200 {
        let mid = (lo + hi) * lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    vt * ((lo + hi) * lit(0.5)).sqrt()
}
