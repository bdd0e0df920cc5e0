use nalgebra::{Complex, ComplexField, DMatrix, DVector};

use super::partial::{partial_waves_at_velocity, PartialWave, TRACTION_SCALE};
use super::{DispersionError, WaveKind};
use crate::materials::{ElasticTensor, LayerStack};
use crate::scalar::{lit, to_f64, Real};

/// Relative wavenumber shift applied when a partial-wave set is degenerate.
pub(crate) const K_PERTURBATION: f64 = 1e-9;

/// One homogeneous medium of a stack in the propagation frame.
#[derive(Debug, Clone)]
pub(crate) struct Medium<T: Real> {
    pub tensor: ElasticTensor<T>,
    pub density: T,
    /// `None` for the substrate.
    pub thickness: Option<T>,
}

pub(crate) fn media<T: Real>(stack: &LayerStack<T>) -> Result<Vec<Medium<T>>, DispersionError> {
    stack.validate()?;
    let mut out = Vec::with_capacity(stack.layers.len() + 1);
    for layer in &stack.layers {
        out.push(Medium {
            tensor: layer.material.tensor(&stack.propagation)?,
            density: layer.material.density(),
            thickness: Some(layer.thickness),
        });
    }
    out.push(Medium {
        tensor: stack.substrate.tensor(&stack.propagation)?,
        density: stack.substrate.density(),
        thickness: None,
    });
    Ok(out)
}

/// Global boundary system for fixed `(omega, k)`.
///
/// Unknowns are the six partial-wave amplitudes of every layer followed by
/// the three substrate amplitudes that satisfy the radiation condition. Rows
/// are the three free-surface traction conditions followed by six continuity
/// conditions (displacement and normal traction) per interface.
#[derive(Debug, Clone)]
pub struct BoundaryMatrix<T: Real> {
    pub matrix: DMatrix<Complex<T>>,
    /// Unit normal traction at the free surface.
    pub rhs: DVector<Complex<T>>,
    /// Maps the solution vector onto the surface normal displacement.
    pub surface_u3: DVector<Complex<T>>,
    pub determinant: Complex<T>,
    /// Ratio of extreme singular values.
    pub condition_number: T,
}

pub(crate) struct Assembly<T: Real> {
    pub matrix: DMatrix<Complex<T>>,
    pub rhs: DVector<Complex<T>>,
    pub surface_u3: DVector<Complex<T>>,
}

fn depth_factors<T: Real>(w: &PartialWave<T>, k: T, h: T) -> (Complex<T>, Complex<T>) {
    // exp(i k p h), bounded by one in magnitude for the chosen reference.
    let one = Complex::new(T::one(), T::zero());
    if w.kind.referenced_at_top() {
        let e = ComplexField::exp(Complex::new(T::zero(), k * h) * w.eigenvalue);
        (one, e)
    } else {
        let e = ComplexField::exp(Complex::new(T::zero(), -k * h) * w.eigenvalue);
        (e, one)
    }
}

pub(crate) fn substrate_waves<T: Real>(
    waves: Vec<PartialWave<T>>,
    velocity: T,
) -> Result<Vec<PartialWave<T>>, DispersionError> {
    let selected: Vec<_> = waves
        .into_iter()
        .filter(|w| matches!(w.kind, WaveKind::Decaying | WaveKind::PropagatingDown))
        .collect();
    if selected.len() != 3 {
        return Err(DispersionError::NotSubsonic {
            velocity: to_f64(velocity),
        });
    }
    Ok(selected)
}

pub(crate) fn assemble<T: Real>(
    media: &[Medium<T>],
    velocity: T,
    k: T,
) -> Result<Assembly<T>, DispersionError> {
    let n_layers = media.len() - 1;
    let dim = 6 * n_layers + 3;
    let zero = Complex::new(T::zero(), T::zero());
    let mut matrix = DMatrix::from_element(dim, dim, zero);
    let mut surface_u3 = DVector::from_element(dim, zero);
    let mut rhs = DVector::from_element(dim, zero);
    rhs[2] = Complex::new(T::one(), T::zero());

    // (column offset, waves, top factors, bottom factors) per medium.
    let mut blocks = Vec::with_capacity(media.len());
    for (idx, m) in media.iter().enumerate() {
        let set = partial_waves_at_velocity(&m.tensor, m.density, velocity)?;
        match m.thickness {
            Some(h) => {
                let factors: Vec<_> = set.waves.iter().map(|w| depth_factors(w, k, h)).collect();
                blocks.push((6 * idx, set.waves, factors));
            }
            None => {
                let waves = substrate_waves(set.waves, velocity)?;
                let one = Complex::new(T::one(), T::zero());
                let factors = vec![(one, one); 3];
                blocks.push((6 * idx, waves, factors));
            }
        }
    }

    // Free surface: tractions of the top medium equal the source.
    let (col0, waves, factors) = &blocks[0];
    for (m, (w, (top, _))) in waves.iter().zip(factors).enumerate() {
        for i in 0..3 {
            matrix[(i, col0 + m)] = w.field[3 + i] * top;
        }
        surface_u3[col0 + m] = w.field[2] * top;
    }

    for q in 0..n_layers {
        let row0 = 3 + 6 * q;
        let (ca, wa, fa) = &blocks[q];
        for (m, (w, (_, bottom))) in wa.iter().zip(fa).enumerate() {
            for i in 0..6 {
                matrix[(row0 + i, ca + m)] = w.field[i] * bottom;
            }
        }
        let (cb, wb, fb) = &blocks[q + 1];
        for (m, (w, (top, _))) in wb.iter().zip(fb).enumerate() {
            for i in 0..6 {
                matrix[(row0 + i, cb + m)] = -(w.field[i] * top);
            }
        }
    }
    Ok(Assembly {
        matrix,
        rhs,
        surface_u3,
    })
}

/// Retries at a wavenumber shifted by one part in 1e9 when the partial-wave
/// eigensystem is defective at the requested point.
pub(crate) fn with_degeneracy_retry<T: Real, R>(
    omega: T,
    k: T,
    mut f: impl FnMut(T, T) -> Result<R, DispersionError>,
) -> Result<R, DispersionError> {
    match f(omega / k, k) {
        Err(DispersionError::DegeneratePoint { .. }) => {
            let k2 = k * (T::one() + lit(K_PERTURBATION));
            f(omega / k2, k2)
        }
        other => other,
    }
}

fn check_positive<T: Real>(omega: T, k: T) -> Result<(), DispersionError> {
    if !(omega > T::zero() && k > T::zero()) {
        return Err(DispersionError::InvalidInput(format!(
            "omega and k must be positive (got {}, {})",
            to_f64(omega),
            to_f64(k)
        )));
    }
    Ok(())
}

/// Assembles the global boundary system of `stack` at `(omega, k)`.
pub fn boundary_matrix<T: Real>(
    stack: &LayerStack<T>,
    omega: T,
    k: T,
) -> Result<BoundaryMatrix<T>, DispersionError> {
    check_positive(omega, k)?;
    let media = media(stack)?;
    let a = with_degeneracy_retry(omega, k, |v, k| assemble(&media, v, k))?;
    let determinant = a.matrix.clone().lu().determinant();
    let sv = a.matrix.clone().singular_values();
    let s_max = sv.max();
    let s_min = sv.min();
    let condition_number = if s_min > T::zero() {
        s_max / s_min
    } else {
        T::max_value().unwrap_or(s_max / s_min)
    };
    Ok(BoundaryMatrix {
        matrix: a.matrix,
        rhs: a.rhs,
        surface_u3: a.surface_u3,
        determinant,
        condition_number,
    })
}

/// Surface normal-displacement response to a normal surface traction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GreenResponse<T: Real> {
    /// `k u3 / t33` in 1/Pa.
    Finite(Complex<T>),
    /// The boundary system is singular: `(omega, k)` lies on a mode.
    Pole,
}

impl<T: Real> GreenResponse<T> {
    pub fn value(&self) -> Option<Complex<T>> {
        match self {
            GreenResponse::Finite(g) => Some(*g),
            GreenResponse::Pole => None,
        }
    }
}

/// Solves the assembled system and returns `-i u3` for unit scaled traction,
/// i.e. the dimensionless admittance `TRACTION_SCALE * G33`.
pub(crate) fn solve_admittance<T: Real>(a: Assembly<T>) -> GreenResponse<T> {
    let Some(x) = a.matrix.lu().solve(&a.rhs) else {
        return GreenResponse::Pole;
    };
    let u3 = a.surface_u3.dot(&x);
    if !(u3.re.is_finite() && u3.im.is_finite()) {
        return GreenResponse::Pole;
    }
    GreenResponse::Finite(Complex::new(u3.im, -u3.re))
}

/// Wavenumber-normalized surface Green's function `G33 = k u3 / t33` (1/Pa).
///
/// The value depends on `(omega, k)` only through the phase velocity and the
/// products `k h`. Below the substrate's sagittal threshold it is real up to
/// rounding.
pub fn surface_green_g33<T: Real>(
    stack: &LayerStack<T>,
    omega: T,
    k: T,
) -> Result<GreenResponse<T>, DispersionError> {
    check_positive(omega, k)?;
    let media = media(stack)?;
    let g = with_degeneracy_retry(omega, k, |v, k| {
        Ok(solve_admittance(assemble(&media, v, k)?))
    })?;
    let scale = Complex::new(lit::<T>(TRACTION_SCALE), T::zero());
    Ok(match g {
        GreenResponse::Finite(x) => GreenResponse::Finite(x / scale),
        GreenResponse::Pole => GreenResponse::Pole,
    })
}
