use nalgebra::{Matrix3, Matrix6, Vector3};

use super::MaterialError;
use crate::scalar::{lit, Real};

/// Maps a symmetric index pair onto its Voigt index.
#[inline]
pub fn voigt_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) | (2, 1) => 3,
        (0, 2) | (2, 0) => 4,
        (0, 1) | (1, 0) => 5,
        _ => panic!("tensor index out of range: ({i}, {j})"),
    }
}

const VOIGT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

/// Fourth-rank elastic stiffness in Voigt notation (Pa).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticTensor<T: Real> {
    voigt: Matrix6<T>,
}

impl<T: Real> ElasticTensor<T> {
    /// Wraps a Voigt matrix after checking symmetry and positive definiteness.
    pub fn from_voigt(voigt: Matrix6<T>) -> Result<Self, MaterialError> {
        let scale = voigt.amax();
        if !(scale > T::zero()) {
            return Err(MaterialError::NotPositiveDefinite);
        }
        let asym = (voigt - voigt.transpose()).amax();
        if asym > scale * lit(1e-12) {
            return Err(MaterialError::NotSymmetric);
        }
        let t = Self { voigt };
        if !t.is_positive_definite() {
            return Err(MaterialError::NotPositiveDefinite);
        }
        Ok(t)
    }

    pub fn voigt(&self) -> &Matrix6<T> {
        &self.voigt
    }

    /// Full-index component `c_ijkl` (zero-based indices).
    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        self.voigt[(voigt_index(i, j), voigt_index(k, l))]
    }

    pub fn is_positive_definite(&self) -> bool {
        let scale = self.voigt.amax();
        if !(scale > T::zero()) {
            return false;
        }
        (self.voigt / scale).cholesky().is_some()
    }

    /// Expresses the tensor in a frame whose axes are the rows of `rotation`
    /// (given in the current frame), using the Bond stress transformation.
    pub fn rotated(&self, rotation: &Matrix3<T>) -> Self {
        let a = rotation;
        let bond = Matrix6::from_fn(|row, col| {
            let (i, j) = VOIGT_PAIRS[row];
            let (k, l) = VOIGT_PAIRS[col];
            if k == l {
                a[(i, k)] * a[(j, k)]
            } else {
                a[(i, k)] * a[(j, l)] + a[(i, l)] * a[(j, k)]
            }
        });
        let mut voigt = bond * self.voigt * bond.transpose();
        // Restore exact symmetry lost to rounding.
        voigt = (voigt + voigt.transpose()) * lit::<T>(0.5);
        Self { voigt }
    }

    /// Young's modulus and Poisson ratio implied by `c11` and `c12`, exact for
    /// isotropic tensors.
    pub fn isotropic_moduli(&self) -> (T, T) {
        let c11 = self.voigt[(0, 0)];
        let c12 = self.voigt[(0, 1)];
        let nu = c12 / (c11 + c12);
        let e = (c11 - c12) * (c11 + c12 * lit(2.0)) / (c11 + c12);
        (e, nu)
    }
}

/// Surface normal and in-plane propagation direction, both in the crystal
/// frame of any cubic material in the stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagation<T: Real> {
    normal: Vector3<T>,
    direction: Vector3<T>,
}

impl<T: Real> Propagation<T> {
    pub fn new(normal: Vector3<T>, direction: Vector3<T>) -> Result<Self, MaterialError> {
        let n = normal.norm();
        let d = direction.norm();
        if !(n > T::zero()) || !(d > T::zero()) {
            return Err(MaterialError::Geometry("zero-length axis".into()));
        }
        let normal = normal / n;
        let direction = direction / d;
        if normal.dot(&direction).abs() > lit(1e-9) {
            return Err(MaterialError::Geometry(
                "propagation direction is not orthogonal to the surface normal".into(),
            ));
        }
        Ok(Self { normal, direction })
    }

    /// (001) surface, [110] propagation.
    pub fn cubic_001_110() -> Self {
        Self::new(
            Vector3::new(T::zero(), T::zero(), T::one()),
            Vector3::new(T::one(), T::one(), T::zero()),
        )
        .expect("orthogonal axes")
    }

    /// (001) surface, [100] propagation.
    pub fn cubic_001_100() -> Self {
        Self::new(
            Vector3::new(T::zero(), T::zero(), T::one()),
            Vector3::new(T::one(), T::zero(), T::zero()),
        )
        .expect("orthogonal axes")
    }

    pub fn normal(&self) -> &Vector3<T> {
        &self.normal
    }

    pub fn direction(&self) -> &Vector3<T> {
        &self.direction
    }

    /// Rows are the lab axes (x1 = propagation, x2 = in-plane transverse,
    /// x3 = surface normal pointing into the solid) in crystal coordinates.
    pub fn rotation(&self) -> Matrix3<T> {
        let x1 = self.direction;
        let x3 = self.normal;
        let x2 = x3.cross(&x1);
        Matrix3::from_rows(&[x1.transpose(), x2.transpose(), x3.transpose()])
    }
}

impl<T: Real> Default for Propagation<T> {
    fn default() -> Self {
        Self::cubic_001_110()
    }
}
