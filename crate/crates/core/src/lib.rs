//! Rayleigh surface-acoustic-wave dispersion of thin-film stacks on
//! anisotropic substrates, analysis of mask-excited narrowband SAW signals,
//! and inversion of measured dispersion curves for film parameters.
//!
//! The material and forward-model layers are generic over [`Real`]; the
//! aliases below fix them to `f64`, which is what the signal, inversion and
//! I/O layers use.

pub mod dispersion;
pub mod inversion;
pub mod materials;
pub mod scalar;
pub mod signal;
pub mod units;

pub use nalgebra;
pub use scalar::Real;

pub type IsotropicMaterial = materials::IsotropicMaterial<f64>;
pub type CubicMaterial = materials::CubicMaterial<f64>;
pub type ElasticMaterial = materials::ElasticMaterial<f64>;
pub type ElasticTensor = materials::ElasticTensor<f64>;
pub type Propagation = materials::Propagation<f64>;
pub type Layer = materials::Layer<f64>;
pub type LayerStack = materials::LayerStack<f64>;
pub type AlloyEndpoints = materials::AlloyEndpoints<f64>;
pub type DispersionCurve = dispersion::DispersionCurve<f64>;
pub type PartialWaveSet = dispersion::PartialWaveSet<f64>;
pub type BoundaryMatrix = dispersion::BoundaryMatrix<f64>;
