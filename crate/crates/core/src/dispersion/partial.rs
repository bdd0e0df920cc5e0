use nalgebra::{Complex, ComplexField, Matrix3, Matrix6, Vector3, Vector6};

use super::DispersionError;
use crate::materials::ElasticTensor;
use crate::scalar::{lit, to_f64, Real};

/// Tractions inside field vectors are expressed in units of this stiffness
/// (100 GPa) so that displacement and traction parts have similar magnitude.
pub const TRACTION_SCALE: f64 = 1e11;

const CLUSTER_TOL: f64 = 1e-8;
const NULLITY_TOL: f64 = 1e-6;
const REAL_TOL: f64 = 1e-9;

// The fixed tolerances are tuned for f64; coarser scalars widen them.
fn cluster_tol<T: Real>() -> T {
    lit::<T>(CLUSTER_TOL).max(T::default_epsilon() * lit(1e3))
}

fn nullity_tol<T: Real>() -> T {
    lit::<T>(NULLITY_TOL).max(T::default_epsilon().sqrt() * lit(10.0))
}

/// Depth behaviour of a partial wave `exp(i k (x1 + p x3 - v t))`, with
/// `x3` pointing into the solid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveKind {
    /// `Im p > 0`
    Decaying,
    /// `Im p < 0`
    Growing,
    /// Real `p`, energy flux into the solid.
    PropagatingDown,
    /// Real `p`, energy flux toward the surface.
    PropagatingUp,
}

impl WaveKind {
    /// Waves whose amplitude is referenced at the upper interface of a layer.
    pub(crate) fn referenced_at_top(self) -> bool {
        matches!(self, WaveKind::Decaying | WaveKind::PropagatingDown)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialWave<T: Real> {
    /// Depth eigenvalue `p` (vertical slowness over horizontal slowness).
    pub eigenvalue: Complex<T>,
    /// `[u1, u2, u3, t13, t23, t33]` with tractions in [`TRACTION_SCALE`]
    /// units and the `i k` factor removed; unit Euclidean norm.
    pub field: Vector6<Complex<T>>,
    pub kind: WaveKind,
}

impl<T: Real> PartialWave<T> {
    pub fn displacement(&self) -> Vector3<Complex<T>> {
        self.field.fixed_rows::<3>(0).into_owned()
    }

    pub fn traction(&self) -> Vector3<Complex<T>> {
        self.field.fixed_rows::<3>(3).into_owned()
    }

    /// Fraction of the field carried by the transverse (x2) components.
    pub fn transverse_fraction(&self) -> T {
        let f = &self.field;
        (f[1].norm_sqr() + f[4].norm_sqr()) / f.norm_squared()
    }
}

/// The six partial waves of one homogeneous medium at fixed phase velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialWaveSet<T: Real> {
    pub waves: Vec<PartialWave<T>>,
    operator: Matrix6<T>,
    velocity: T,
}

impl<T: Real> PartialWaveSet<T> {
    /// The real 6x6 depth operator whose eigenpairs are the partial waves.
    pub fn operator(&self) -> &Matrix6<T> {
        &self.operator
    }

    pub fn velocity(&self) -> T {
        self.velocity
    }

    /// `|L r - p r| / |r|` for wave `i`.
    pub fn residual(&self, i: usize) -> T {
        let w = &self.waves[i];
        let l = self.operator.map(|x| Complex::new(x, T::zero()));
        let r = &w.field;
        (l * r - r * w.eigenvalue).norm() / r.norm()
    }

    pub fn count(&self, kind: WaveKind) -> usize {
        self.waves.iter().filter(|w| w.kind == kind).count()
    }
}

/// Christoffel-type sub-blocks `Q_ik = c_i1k1`, `R_ik = c_i1k3`,
/// `T_ik = c_i3k3` in traction-scale units.
pub(crate) fn stroh_blocks<T: Real>(c: &ElasticTensor<T>) -> (Matrix3<T>, Matrix3<T>, Matrix3<T>) {
    let s: T = lit(TRACTION_SCALE);
    let q = Matrix3::from_fn(|i, k| c.c(i, 0, k, 0) / s);
    let r = Matrix3::from_fn(|i, k| c.c(i, 0, k, 2) / s);
    let t = Matrix3::from_fn(|i, k| c.c(i, 2, k, 2) / s);
    (q, r, t)
}

/// Bulk phase velocities along x1, ascending.
pub fn bulk_velocities_x1<T: Real>(c: &ElasticTensor<T>, density: T) -> [T; 3] {
    let (q, _, _) = stroh_blocks(c);
    let eig = q.symmetric_eigenvalues();
    let s: T = lit(TRACTION_SCALE);
    let mut v = [eig[0], eig[1], eig[2]].map(|x| (x.max(T::zero()) * s / density).sqrt());
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Partial waves for angular frequency `omega` and horizontal wavenumber `k`.
pub fn partial_waves<T: Real>(
    tensor: &ElasticTensor<T>,
    density: T,
    omega: T,
    k: T,
) -> Result<PartialWaveSet<T>, DispersionError> {
    if !(omega > T::zero() && k > T::zero()) {
        return Err(DispersionError::InvalidInput(format!(
            "omega and k must be positive (got {}, {})",
            to_f64(omega),
            to_f64(k)
        )));
    }
    partial_waves_at_velocity(tensor, density, omega / k)
}

pub(crate) fn partial_waves_at_velocity<T: Real>(
    tensor: &ElasticTensor<T>,
    density: T,
    velocity: T,
) -> Result<PartialWaveSet<T>, DispersionError> {
    let (q, r, t) = stroh_blocks(tensor);
    let inertia = density * velocity * velocity / lit(TRACTION_SCALE);
    let t_inv = t
        .try_inverse()
        .ok_or_else(|| DispersionError::InvalidInput("singular T block".into()))?;
    let n1 = -t_inv * r.transpose();
    let n3 = r * t_inv * r.transpose() - q + Matrix3::identity() * inertia;
    let mut op = Matrix6::zeros();
    op.fixed_view_mut::<3, 3>(0, 0).copy_from(&n1);
    op.fixed_view_mut::<3, 3>(0, 3).copy_from(&t_inv);
    op.fixed_view_mut::<3, 3>(3, 0).copy_from(&n3);
    op.fixed_view_mut::<3, 3>(3, 3).copy_from(&n1.transpose());

    let mut eig: Vec<Complex<T>> = op.complex_eigenvalues().iter().copied().collect();
    if eig.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
        return Err(DispersionError::DegeneratePoint {
            velocity: to_f64(velocity),
        });
    }
    eig.sort_by(|a, b| {
        a.im.partial_cmp(&b.im)
            .unwrap()
            .then(a.re.partial_cmp(&b.re).unwrap())
    });

    let cq = q.map(|x| Complex::new(x, T::zero()));
    let crs = (r + r.transpose()).map(|x| Complex::new(x, T::zero()));
    let ct = t.map(|x| Complex::new(x, T::zero()));
    let cr_t = r.transpose().map(|x| Complex::new(x, T::zero()));
    let cinertia = Complex::new(inertia, T::zero());

    let mut assigned = [false; 6];
    let mut waves = Vec::with_capacity(6);
    for i in 0..6 {
        if assigned[i] {
            continue;
        }
        let tol = cluster_tol::<T>() * (T::one() + eig[i].modulus());
        let members: Vec<usize> = (i..6)
            .filter(|&j| !assigned[j] && (eig[j] - eig[i]).modulus() <= tol)
            .collect();
        for &j in &members {
            assigned[j] = true;
        }
        let m = members.len();
        let p = members
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &j| acc + eig[j])
            / Complex::new(lit::<T>(m as f64), T::zero());

        let gamma = cq + crs * p + ct * (p * p) - Matrix3::identity() * cinertia;
        let svd = gamma.svd(false, true);
        let v_t = svd.v_t.expect("requested V^H");
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .unwrap()
        });
        let s_max = svd.singular_values[order[0]].max(lit(1e-300));
        let nullity = order
            .iter()
            .filter(|&&o| svd.singular_values[o] <= s_max * nullity_tol::<T>())
            .count();
        if nullity < m || m > 3 {
            return Err(DispersionError::DegeneratePoint {
                velocity: to_f64(velocity),
            });
        }
        for &o in order.iter().skip(3 - m) {
            let a: Vector3<Complex<T>> = v_t.row(o).adjoint();
            let b = (cr_t + ct * p) * a;
            let mut field = Vector6::from_fn(|row, _| if row < 3 { a[row] } else { b[row - 3] });
            let norm = field.norm();
            field /= Complex::new(norm, T::zero());
            waves.push(PartialWave {
                eigenvalue: p,
                field,
                kind: classify(p, &field),
            });
        }
    }
    Ok(PartialWaveSet {
        waves,
        operator: op,
        velocity,
    })
}

fn classify<T: Real>(p: Complex<T>, field: &Vector6<Complex<T>>) -> WaveKind {
    let tol = lit::<T>(REAL_TOL).max(T::default_epsilon() * lit(100.0)) * (T::one() + p.modulus());
    if p.im > tol {
        WaveKind::Decaying
    } else if p.im < -tol {
        WaveKind::Growing
    } else {
        // Time-averaged normal power flux is proportional to Re(t . conj(u)).
        let flux = (0..3).fold(T::zero(), |acc, i| {
            acc + (field[i + 3] * field[i].conj()).re
        });
        if flux >= T::zero() {
            WaveKind::PropagatingDown
        } else {
            WaveKind::PropagatingUp
        }
    }
}
