//! Weighted least-squares fitting of stack parameters to measured
//! dispersion curves, with identifiability diagnostics.

mod identifiability;
mod problem;
mod report;
mod solver;

use thiserror::Error;

use crate::dispersion::DispersionError;
use crate::materials::MaterialError;

pub use identifiability::{
    identifiability_report, Identifiability, IdentifiabilityReport, ParamDiagnostic,
};
pub use problem::{
    apply_coupling, FitOptions, FitProblem, FreeParam, LayerModel, LayerTemplate, ParamTarget,
    Quantity, StackTemplate, Transform,
};
pub use solver::{fit_parameters, residuals, ConvergenceStatus, Estimate, FitResult, ResidualRow};

#[derive(Debug, Error)]
pub enum InversionError {
    #[error("invalid fit problem: {0}")]
    Problem(String),
    #[error("parameter `{name}` = {value} outside [{lower}, {upper}]")]
    OutOfBounds {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("forward model failed at {frequency:.6e} Hz (point {index}): {source}")]
    Forward {
        index: usize,
        frequency: f64,
        #[source]
        source: Box<DispersionError>,
    },
    #[error(transparent)]
    Dispersion(DispersionError),
}

impl From<DispersionError> for InversionError {
    fn from(e: DispersionError) -> Self {
        match e {
            DispersionError::Points(mut failures) if !failures.is_empty() => {
                let first = failures.swap_remove(0);
                InversionError::Forward {
                    index: first.index,
                    frequency: first.frequency,
                    source: first.error,
                }
            }
            DispersionError::Material(m) => InversionError::Material(m),
            other => InversionError::Dispersion(other),
        }
    }
}

#[cfg(test)]
mod tests;
