//! Material records, stiffness construction, SiGe mixing rules and layer
//! stacks.

mod db;
mod tensor;

use nalgebra::Matrix6;
use thiserror::Error;

use crate::scalar::{lit, to_f64, Real};

pub use db::{
    load_material_db, AlloyEndpoints, DbError, MaterialDb, MaterialEntry, MaterialRecord,
};
pub use tensor::{voigt_index, ElasticTensor, Propagation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaterialError {
    #[error("{what} = {value} is outside {range}")]
    Domain {
        what: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("Poisson ratio of 0.5 gives an incompressible, singular stiffness")]
    SingularMaterial,
    #[error("stiffness matrix is not symmetric")]
    NotSymmetric,
    #[error("stiffness matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid propagation geometry: {0}")]
    Geometry(String),
}

fn domain(what: &'static str, value: f64, range: &'static str) -> MaterialError {
    MaterialError::Domain { what, value, range }
}

/// Isotropic solid described by engineering constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicMaterial<T: Real> {
    /// Pa
    pub young_modulus: T,
    pub poisson_ratio: T,
    /// kg/m³
    pub density: T,
}

impl<T: Real> IsotropicMaterial<T> {
    pub fn new(young_modulus: T, poisson_ratio: T, density: T) -> Result<Self, MaterialError> {
        let m = Self {
            young_modulus,
            poisson_ratio,
            density,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.young_modulus > T::zero()) {
            return Err(domain(
                "young_modulus",
                to_f64(self.young_modulus),
                "(0, inf)",
            ));
        }
        if !(self.density > T::zero()) {
            return Err(domain("density", to_f64(self.density), "(0, inf)"));
        }
        if self.poisson_ratio == lit(0.5) {
            return Err(MaterialError::SingularMaterial);
        }
        if !(self.poisson_ratio > lit(-1.0) && self.poisson_ratio < lit(0.5)) {
            return Err(domain(
                "poisson_ratio",
                to_f64(self.poisson_ratio),
                "(-1, 0.5)",
            ));
        }
        Ok(())
    }

    /// Lamé constants `(lambda, mu)`.
    pub fn lame(&self) -> (T, T) {
        let e = self.young_modulus;
        let nu = self.poisson_ratio;
        let one = T::one();
        let two: T = lit(2.0);
        let lambda = e * nu / ((one + nu) * (one - two * nu));
        let mu = e / (two * (one + nu));
        (lambda, mu)
    }

    pub fn shear_velocity(&self) -> T {
        (self.lame().1 / self.density).sqrt()
    }

    pub fn longitudinal_velocity(&self) -> T {
        let (lambda, mu) = self.lame();
        ((lambda + mu * lit(2.0)) / self.density).sqrt()
    }
}

/// Cubic crystal constants in the crystal frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicMaterial<T: Real> {
    pub c11: T,
    pub c12: T,
    pub c44: T,
    pub density: T,
}

impl<T: Real> CubicMaterial<T> {
    pub fn new(c11: T, c12: T, c44: T, density: T) -> Result<Self, MaterialError> {
        let m = Self {
            c11,
            c12,
            c44,
            density,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.c44 > T::zero()) {
            return Err(domain("c44", to_f64(self.c44), "(0, inf)"));
        }
        if !(self.c11 > self.c12.abs()) {
            return Err(domain("c11", to_f64(self.c11), "(|c12|, inf)"));
        }
        if !(self.c11 + self.c12 * lit(2.0) > T::zero()) {
            return Err(domain(
                "c11 + 2 c12",
                to_f64(self.c11 + self.c12 * lit(2.0)),
                "(0, inf)",
            ));
        }
        if !(self.density > T::zero()) {
            return Err(domain("density", to_f64(self.density), "(0, inf)"));
        }
        Ok(())
    }
}

/// Either symmetry class supported by the forward model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElasticMaterial<T: Real> {
    Isotropic(IsotropicMaterial<T>),
    Cubic(CubicMaterial<T>),
}

impl<T: Real> ElasticMaterial<T> {
    pub fn density(&self) -> T {
        match self {
            ElasticMaterial::Isotropic(m) => m.density,
            ElasticMaterial::Cubic(m) => m.density,
        }
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        match self {
            ElasticMaterial::Isotropic(m) => m.validate(),
            ElasticMaterial::Cubic(m) => m.validate(),
        }
    }

    /// Stiffness in the lab frame of `propagation`.
    pub fn tensor(&self, propagation: &Propagation<T>) -> Result<ElasticTensor<T>, MaterialError> {
        match self {
            ElasticMaterial::Isotropic(m) => stiffness_from_isotropic(m),
            ElasticMaterial::Cubic(m) => {
                Ok(stiffness_from_cubic(m)?.rotated(&propagation.rotation()))
            }
        }
    }
}

impl<T: Real> From<IsotropicMaterial<T>> for ElasticMaterial<T> {
    fn from(m: IsotropicMaterial<T>) -> Self {
        ElasticMaterial::Isotropic(m)
    }
}

impl<T: Real> From<CubicMaterial<T>> for ElasticMaterial<T> {
    fn from(m: CubicMaterial<T>) -> Self {
        ElasticMaterial::Cubic(m)
    }
}

fn cubic_voigt<T: Real>(c11: T, c12: T, c44: T) -> Matrix6<T> {
    let mut v = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            v[(i, j)] = if i == j { c11 } else { c12 };
        }
        v[(i + 3, i + 3)] = c44;
    }
    v
}

/// Voigt stiffness of an isotropic solid from `(E, nu)`.
pub fn stiffness_from_isotropic<T: Real>(
    m: &IsotropicMaterial<T>,
) -> Result<ElasticTensor<T>, MaterialError> {
    m.validate()?;
    let (lambda, mu) = m.lame();
    ElasticTensor::from_voigt(cubic_voigt(lambda + mu * lit(2.0), lambda, mu))
}

/// Voigt stiffness of a cubic crystal in its crystal frame. Rotate the result
/// with [`ElasticTensor::rotated`] to reach a propagation frame.
pub fn stiffness_from_cubic<T: Real>(
    m: &CubicMaterial<T>,
) -> Result<ElasticTensor<T>, MaterialError> {
    m.validate()?;
    ElasticTensor::from_voigt(cubic_voigt(m.c11, m.c12, m.c44))
}

fn check_fraction<T: Real>(c_ge: T) -> Result<(), MaterialError> {
    if !(c_ge >= T::zero() && c_ge <= T::one()) {
        return Err(domain("c_ge", to_f64(c_ge), "[0, 1]"));
    }
    Ok(())
}

/// Linear Young's-modulus mixing between the Si and Ge endpoints.
pub fn mix_young_modulus<T: Real>(c_ge: T, e_si: T, e_ge: T) -> Result<T, MaterialError> {
    check_fraction(c_ge)?;
    if !(e_si > T::zero() && e_ge > T::zero()) {
        return Err(domain(
            "endpoint modulus",
            to_f64(e_si.min(e_ge)),
            "(0, inf)",
        ));
    }
    Ok(e_si - c_ge * (e_si - e_ge))
}

/// Linear density mixing between the Si and Ge endpoints.
pub fn mix_density<T: Real>(c_ge: T, rho_si: T, rho_ge: T) -> Result<T, MaterialError> {
    check_fraction(c_ge)?;
    if !(rho_si > T::zero() && rho_ge > T::zero()) {
        return Err(domain(
            "endpoint density",
            to_f64(rho_si.min(rho_ge)),
            "(0, inf)",
        ));
    }
    Ok(rho_si + c_ge * (rho_ge - rho_si))
}

/// A finite-thickness film.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer<T: Real> {
    pub material: ElasticMaterial<T>,
    /// m
    pub thickness: T,
}

impl<T: Real> Layer<T> {
    pub fn new(
        material: impl Into<ElasticMaterial<T>>,
        thickness: T,
    ) -> Result<Self, MaterialError> {
        let material = material.into();
        material.validate()?;
        if !(thickness > T::zero()) {
            return Err(domain("thickness", to_f64(thickness), "(0, inf)"));
        }
        Ok(Self {
            material,
            thickness,
        })
    }
}

/// Films over a half-space substrate, surface layer first.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack<T: Real> {
    pub layers: Vec<Layer<T>>,
    pub substrate: ElasticMaterial<T>,
    pub propagation: Propagation<T>,
}

impl<T: Real> LayerStack<T> {
    pub fn new(
        layers: Vec<Layer<T>>,
        substrate: impl Into<ElasticMaterial<T>>,
        propagation: Propagation<T>,
    ) -> Result<Self, MaterialError> {
        let stack = Self {
            layers,
            substrate: substrate.into(),
            propagation,
        };
        stack.validate()?;
        Ok(stack)
    }

    /// Bare substrate.
    pub fn half_space(
        substrate: impl Into<ElasticMaterial<T>>,
        propagation: Propagation<T>,
    ) -> Self {
        Self {
            layers: Vec::new(),
            substrate: substrate.into(),
            propagation,
        }
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        self.substrate.validate()?;
        for layer in &self.layers {
            layer.material.validate()?;
            if !(layer.thickness > T::zero()) {
                return Err(domain("thickness", to_f64(layer.thickness), "(0, inf)"));
            }
        }
        Propagation::new(*self.propagation.normal(), *self.propagation.direction())?;
        Ok(())
    }

    /// Same stack with every thickness multiplied by `factor`.
    pub fn scaled_thickness(&self, factor: T) -> Self {
        let mut s = self.clone();
        for layer in &mut s.layers {
            layer.thickness *= factor;
        }
        s
    }
}
