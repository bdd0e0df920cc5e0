use std::f64::consts::PI;

use super::boundary::{
    assemble, media, solve_admittance, with_degeneracy_retry, GreenResponse, Medium,
};
use super::partial::{bulk_velocities_x1, partial_waves_at_velocity};
use super::{CurvePoint, DispersionCurve, DispersionError, PointFailure, WaveKind};
use crate::materials::LayerStack;
use crate::scalar::{lit, to_f64, Real};

/// Grid spacing of the full velocity scan (m/s).
pub const SCAN_STEP: f64 = 5.0;
/// Relative bracket width at which a root is accepted.
const ROOT_XTOL: f64 = 1e-13;
/// A refined sign change is a zero (not a pole) when the indicator there is
/// this much smaller than at the bracketing grid points.
const ZERO_RATIO: f64 = 1e-6;
/// Relative velocity step above which adjacent curve points are flagged.
pub const JUMP_TOL: f64 = 0.05;
const SH_FRACTION: f64 = 1.0 - 1e-6;

/// Smallest velocity at which a partial wave of the half-space that couples to
/// the sagittal plane stops decaying with depth.
///
/// Purely transverse (SH) partial waves are excluded: when the sagittal plane
/// is a mirror plane they cannot be excited by a normal surface source.
pub fn sagittal_limiting_velocity<T: Real>(
    tensor: &crate::materials::ElasticTensor<T>,
    density: T,
) -> Result<T, DispersionError> {
    let subsonic = |v: T| -> bool {
        let set = match partial_waves_at_velocity(tensor, density, v) {
            Ok(s) => s,
            Err(DispersionError::DegeneratePoint { .. }) => {
                match partial_waves_at_velocity(tensor, density, v * (T::one() - lit(1e-9))) {
                    Ok(s) => s,
                    Err(_) => return false,
                }
            }
            Err(_) => return false,
        };
        set.waves.iter().all(|w| {
            matches!(w.kind, WaveKind::Decaying | WaveKind::Growing)
                || w.transverse_fraction() > lit(SH_FRACTION)
        })
    };
    let bulk = bulk_velocities_x1(tensor, density);
    let mut lo = bulk[0] * lit(0.5);
    if !subsonic(lo) {
        return Err(DispersionError::InvalidInput(
            "substrate has no evanescent regime".into(),
        ));
    }
    let ceiling = bulk[2] * lit(3.0);
    let mut hi = lo;
    while subsonic(hi) {
        lo = hi;
        hi *= lit(1.01);
        if hi > ceiling {
            return Ok(ceiling);
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) * lit(0.5);
        if subsonic(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= hi * lit(1e-13) {
            break;
        }
    }
    Ok(lo)
}

/// Root finder for the lowest surface mode of one stack.
pub(crate) struct ModeSolver<T: Real> {
    media: Vec<Medium<T>>,
    v_min: T,
    v_max: T,
}

struct Sample<T> {
    v: T,
    d: T,
}

impl<T: Real> ModeSolver<T> {
    pub fn new(stack: &LayerStack<T>) -> Result<Self, DispersionError> {
        let media = media(stack)?;
        let slowest = media
            .iter()
            .map(|m| bulk_velocities_x1(&m.tensor, m.density)[0])
            .fold(T::max_value().unwrap(), |a, b| a.min(b));
        let sub = media.last().unwrap();
        let limit = sagittal_limiting_velocity(&sub.tensor, sub.density)?;
        Ok(Self {
            media,
            v_min: slowest * lit(0.5),
            v_max: limit * (T::one() - lit(1e-6)),
        })
    }

    pub fn window(&self) -> (T, T) {
        (self.v_min, self.v_max)
    }

    /// `1 / Re(admittance)`: crosses zero at a mode, finite elsewhere except
    /// at admittance zeros.
    fn indicator(&self, frequency: T, v: T) -> Result<T, DispersionError> {
        let omega = lit::<T>(2.0 * PI) * frequency;
        let k = omega / v;
        let g = with_degeneracy_retry(omega, k, |v, k| {
            Ok(solve_admittance(assemble(&self.media, v, k)?))
        })?;
        Ok(match g {
            GreenResponse::Pole => T::zero(),
            GreenResponse::Finite(g) => T::one() / g.re,
        })
    }

    fn sample(&self, frequency: T, v: T) -> Result<Sample<T>, DispersionError> {
        Ok(Sample {
            v,
            d: self.indicator(frequency, v)?,
        })
    }

    /// Refines a sign change; `None` when it turns out to be a pole.
    fn refine(
        &self,
        frequency: T,
        a: &Sample<T>,
        b: &Sample<T>,
    ) -> Result<Option<T>, DispersionError> {
        if a.d == T::zero() {
            return Ok(Some(a.v));
        }
        if b.d == T::zero() {
            return Ok(Some(b.v));
        }
        let reference = a.d.abs().max(b.d.abs());
        let (root, fa, fb) = brent(|v| self.indicator(frequency, v), a.v, a.d, b.v, b.d)?;
        let ratio = lit::<T>(ZERO_RATIO).max(T::default_epsilon().sqrt());
        if fa.abs().min(fb.abs()) <= reference * ratio {
            Ok(Some(root))
        } else {
            Ok(None)
        }
    }

    /// Lowest root in the full velocity window.
    pub fn scan(&self, frequency: T) -> Result<T, DispersionError> {
        let step: T = lit(SCAN_STEP);
        let mut prev = self.sample(frequency, self.v_min)?;
        let mut min_abs = prev.d.abs();
        let mut j = 1usize;
        loop {
            let v = (self.v_min + step * lit(j as f64)).min(self.v_max);
            let cur = self.sample(frequency, v)?;
            min_abs = min_abs.min(cur.d.abs());
            if prev.d * cur.d <= T::zero() {
                if let Some(root) = self.refine(frequency, &prev, &cur)? {
                    return Ok(root);
                }
            }
            if v >= self.v_max {
                break;
            }
            prev = cur;
            j += 1;
        }
        Err(DispersionError::NoMode {
            frequency: to_f64(frequency),
            v_min: to_f64(self.v_min),
            v_max: to_f64(self.v_max),
            min_abs_indicator: to_f64(min_abs),
        })
    }

    /// Root nearest to `guess`, found by expanding a bracket around it.
    /// Falls back to the full scan when nothing is found.
    pub fn near(&self, frequency: T, guess: T) -> Result<T, DispersionError> {
        if !(guess > self.v_min && guess < self.v_max) {
            return self.scan(frequency);
        }
        let center = self.sample(frequency, guess)?;
        let mut left = Sample {
            v: center.v,
            d: center.d,
        };
        let mut right = Sample {
            v: center.v,
            d: center.d,
        };
        let mut h = guess * lit(2e-3);
        loop {
            let lv = (guess - h).max(self.v_min);
            let rv = (guess + h).min(self.v_max);
            let mut found: Option<T> = None;
            if lv < left.v {
                let l = self.sample(frequency, lv)?;
                if l.d * left.d <= T::zero() {
                    found = self.refine(frequency, &l, &left)?;
                }
                left = l;
            }
            if rv > right.v {
                let r = self.sample(frequency, rv)?;
                if r.d * right.d <= T::zero() {
                    if let Some(root) = self.refine(frequency, &right, &r)? {
                        found = match found {
                            Some(other) if (other - guess).abs() <= (root - guess).abs() => {
                                Some(other)
                            }
                            _ => Some(root),
                        };
                    }
                }
                right = r;
            }
            if let Some(root) = found {
                return Ok(root);
            }
            if left.v <= self.v_min && right.v >= self.v_max {
                return self.scan(frequency);
            }
            h *= lit(2.0);
        }
    }
}

/// Brent's method on a bracketing interval. Returns the root estimate and the
/// function values at the final bracket ends.
fn brent<T: Real>(
    mut f: impl FnMut(T) -> Result<T, DispersionError>,
    mut a: T,
    mut fa: T,
    mut b: T,
    mut fb: T,
) -> Result<(T, T, T), DispersionError> {
    let two: T = lit(2.0);
    let half: T = lit(0.5);
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > T::zero() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = lit::<T>(ROOT_XTOL).max(T::default_epsilon() * lit(4.0)) * b.abs();
        let m = half * (c - b);
        if m.abs() <= tol || fb == T::zero() {
            return Ok((b, fb, fc));
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qq * (qq - r) - (b - a) * (r - T::one()));
                q = (qq - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            let bound1 = lit::<T>(3.0) * m * q - (tol * q).abs();
            let bound2 = (e * q).abs();
            if two * p < bound1.min(bound2) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol {
            d
        } else if m > T::zero() {
            tol
        } else {
            -tol
        };
        fb = f(b)?;
    }
    Ok((b, fb, fc))
}

fn check_frequency<T: Real>(f: T) -> Result<(), DispersionError> {
    if !(f > T::zero()) || !f.is_finite() {
        return Err(DispersionError::InvalidInput(format!(
            "frequency must be positive, got {}",
            to_f64(f)
        )));
    }
    Ok(())
}

/// Phase velocity of the lowest (Rayleigh-like) surface mode at `frequency`.
pub fn saw_phase_velocity<T: Real>(
    stack: &LayerStack<T>,
    frequency: T,
) -> Result<T, DispersionError> {
    check_frequency(frequency)?;
    ModeSolver::new(stack)?.scan(frequency)
}

fn check_frequencies<T: Real>(frequencies: &[T]) -> Result<(), DispersionError> {
    for (i, &f) in frequencies.iter().enumerate() {
        check_frequency(f)?;
        if i > 0 && !(f > frequencies[i - 1]) {
            return Err(DispersionError::InvalidInput(format!(
                "frequencies must be strictly increasing (index {i})"
            )));
        }
    }
    Ok(())
}

fn finish<T: Real>(
    frequencies: &[T],
    velocities: Vec<Option<T>>,
    failures: Vec<PointFailure>,
) -> Result<DispersionCurve<T>, DispersionError> {
    if !failures.is_empty() {
        return Err(DispersionError::Points(failures));
    }
    let points: Vec<_> = frequencies
        .iter()
        .zip(velocities)
        .map(|(&frequency, v)| CurvePoint {
            frequency,
            velocity: v.expect("no failures"),
            sigma: None,
        })
        .collect();
    let mut curve = DispersionCurve::new(points)?;
    curve.flag_jumps(lit(JUMP_TOL));
    Ok(curve)
}

/// Lowest-mode dispersion curve, tracking the mode from point to point.
pub fn dispersion_curve<T: Real>(
    stack: &LayerStack<T>,
    frequencies: &[T],
) -> Result<DispersionCurve<T>, DispersionError> {
    check_frequencies(frequencies)?;
    if frequencies.is_empty() {
        return Ok(DispersionCurve::empty());
    }
    let solver = ModeSolver::new(stack)?;
    let mut velocities: Vec<Option<T>> = Vec::with_capacity(frequencies.len());
    let mut failures = Vec::new();
    let mut history: Vec<(T, T)> = Vec::new();
    for (i, &f) in frequencies.iter().enumerate() {
        let result = match history.len() {
            0 => solver.scan(f),
            1 => solver.near(f, history[0].1),
            n => {
                // Linear extrapolation from the last two points.
                let (f0, v0) = history[n - 2];
                let (f1, v1) = history[n - 1];
                let slope = (v1 - v0) / (f1 - f0);
                solver.near(f, v1 + slope * (f - f1))
            }
        };
        match result {
            Ok(v) => {
                history.push((f, v));
                velocities.push(Some(v));
            }
            Err(e) => {
                failures.push(PointFailure {
                    index: i,
                    frequency: to_f64(f),
                    error: Box::new(e),
                });
                velocities.push(None);
            }
        }
    }
    finish(frequencies, velocities, failures)
}

/// Like [`dispersion_curve`], but each point is searched next to a caller
/// supplied velocity (typically a nearby, previously computed curve).
pub fn dispersion_curve_near<T: Real>(
    stack: &LayerStack<T>,
    frequencies: &[T],
    guesses: &[T],
) -> Result<DispersionCurve<T>, DispersionError> {
    check_frequencies(frequencies)?;
    if guesses.len() != frequencies.len() {
        return Err(DispersionError::InvalidInput(
            "one velocity guess per frequency is required".into(),
        ));
    }
    if frequencies.is_empty() {
        return Ok(DispersionCurve::empty());
    }
    let solver = ModeSolver::new(stack)?;
    let mut velocities = Vec::with_capacity(frequencies.len());
    let mut failures = Vec::new();
    for (i, (&f, &g)) in frequencies.iter().zip(guesses).enumerate() {
        match solver.near(f, g) {
            Ok(v) => velocities.push(Some(v)),
            Err(e) => {
                failures.push(PointFailure {
                    index: i,
                    frequency: to_f64(f),
                    error: Box::new(e),
                });
                velocities.push(None);
            }
        }
    }
    finish(frequencies, velocities, failures)
}

/// Velocity window `(lower, upper)` scanned for the lowest mode of `stack`.
pub fn search_window<T: Real>(stack: &LayerStack<T>) -> Result<(T, T), DispersionError> {
    Ok(ModeSolver::new(stack)?.window())
}
