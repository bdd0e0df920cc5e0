use std::fmt;
use std::str::FromStr;

use super::InversionError;
use crate::materials::{ElasticMaterial, MaterialError};
use crate::{AlloyEndpoints, DispersionCurve, IsotropicMaterial, Layer, LayerStack, Propagation};

/// `(E, rho)` of a SiGe film at germanium fraction `c_ge`.
pub fn apply_coupling(c_ge: f64, endpoints: &AlloyEndpoints) -> Result<(f64, f64), MaterialError> {
    endpoints.mix(c_ge)
}

/// How a layer's material is parameterized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerModel {
    /// Material held fixed; only the thickness can be freed.
    Fixed(ElasticMaterial<f64>),
    /// `young_modulus`, `poisson_ratio` and `density` can be freed.
    Isotropic(IsotropicMaterial),
    /// E and rho follow the mixing rules in `c_ge`; `c_ge` and
    /// `poisson_ratio` can be freed.
    Alloy {
        endpoints: AlloyEndpoints,
        c_ge: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerTemplate {
    pub name: String,
    pub model: LayerModel,
    pub thickness: f64,
}

/// Layer stack whose layers are addressable by name.
#[derive(Debug, Clone, PartialEq)]
pub struct StackTemplate {
    pub layers: Vec<LayerTemplate>,
    pub substrate: ElasticMaterial<f64>,
    pub propagation: Propagation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Thickness,
    YoungModulus,
    PoissonRatio,
    Density,
    GeFraction,
}

impl Quantity {
    pub fn key(self) -> &'static str {
        match self {
            Quantity::Thickness => "thickness",
            Quantity::YoungModulus => "young_modulus",
            Quantity::PoissonRatio => "poisson_ratio",
            Quantity::Density => "density",
            Quantity::GeFraction => "c_ge",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Quantity::Thickness => "m",
            Quantity::YoungModulus => "Pa",
            Quantity::Density => "kg/m3",
            Quantity::PoissonRatio | Quantity::GeFraction => "1",
        }
    }
}

impl FromStr for Quantity {
    type Err = InversionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "thickness" | "d" => Quantity::Thickness,
            "young_modulus" | "E" => Quantity::YoungModulus,
            "poisson_ratio" | "nu" => Quantity::PoissonRatio,
            "density" | "rho" => Quantity::Density,
            "c_ge" => Quantity::GeFraction,
            other => {
                return Err(InversionError::Problem(format!(
                    "unknown quantity `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamTarget {
    pub layer: usize,
    pub quantity: Quantity,
}

impl StackTemplate {
    /// Resolves `layer.quantity`.
    pub fn target(&self, name: &str) -> Result<ParamTarget, InversionError> {
        let (layer_name, q) = name.rsplit_once('.').ok_or_else(|| {
            InversionError::Problem(format!(
                "parameter `{name}` is not of the form layer.quantity"
            ))
        })?;
        let quantity: Quantity = q.parse()?;
        let layer = self
            .layers
            .iter()
            .position(|l| l.name == layer_name)
            .ok_or_else(|| InversionError::Problem(format!("no layer named `{layer_name}`")))?;
        let ok = matches!(
            (&self.layers[layer].model, quantity),
            (_, Quantity::Thickness)
                | (
                    LayerModel::Isotropic(_),
                    Quantity::YoungModulus | Quantity::PoissonRatio | Quantity::Density,
                )
                | (
                    LayerModel::Alloy { .. },
                    Quantity::GeFraction | Quantity::PoissonRatio
                )
        );
        if !ok {
            return Err(InversionError::Problem(format!(
                "layer `{layer_name}` has no free `{}` in its material model",
                quantity.key()
            )));
        }
        Ok(ParamTarget { layer, quantity })
    }

    /// Current value of a parameter.
    pub fn value(&self, t: ParamTarget) -> f64 {
        let l = &self.layers[t.layer];
        match (&l.model, t.quantity) {
            (_, Quantity::Thickness) => l.thickness,
            (LayerModel::Isotropic(m), Quantity::YoungModulus) => m.young_modulus,
            (LayerModel::Isotropic(m), Quantity::PoissonRatio) => m.poisson_ratio,
            (LayerModel::Isotropic(m), Quantity::Density) => m.density,
            (LayerModel::Alloy { c_ge, .. }, Quantity::GeFraction) => *c_ge,
            (LayerModel::Alloy { endpoints, .. }, Quantity::PoissonRatio) => {
                endpoints.poisson_ratio
            }
            _ => f64::NAN,
        }
    }

    /// Copy of the template with `assignments` applied.
    pub fn with(&self, assignments: &[(ParamTarget, f64)]) -> StackTemplate {
        let mut t = self.clone();
        for &(target, v) in assignments {
            let l = &mut t.layers[target.layer];
            match (&mut l.model, target.quantity) {
                (_, Quantity::Thickness) => l.thickness = v,
                (LayerModel::Isotropic(m), Quantity::YoungModulus) => m.young_modulus = v,
                (LayerModel::Isotropic(m), Quantity::PoissonRatio) => m.poisson_ratio = v,
                (LayerModel::Isotropic(m), Quantity::Density) => m.density = v,
                (LayerModel::Alloy { c_ge, .. }, Quantity::GeFraction) => *c_ge = v,
                (LayerModel::Alloy { endpoints, .. }, Quantity::PoissonRatio) => {
                    endpoints.poisson_ratio = v
                }
                _ => {}
            }
        }
        t
    }

    pub fn stack(&self) -> Result<LayerStack, MaterialError> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let material: ElasticMaterial<f64> = match &l.model {
                    LayerModel::Fixed(m) => *m,
                    LayerModel::Isotropic(m) => {
                        m.validate()?;
                        (*m).into()
                    }
                    LayerModel::Alloy { endpoints, c_ge } => endpoints.material(*c_ge)?.into(),
                };
                Layer::new(material, l.thickness)
            })
            .collect::<Result<Vec<_>, _>>()?;
        LayerStack::new(layers, self.substrate, self.propagation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transform {
    #[default]
    Linear,
    /// Optimize in `ln(x)`; requires a positive lower bound.
    Log,
}

impl Transform {
    pub(crate) fn forward(self, x: f64) -> f64 {
        match self {
            Transform::Linear => x,
            Transform::Log => x.ln(),
        }
    }

    pub(crate) fn inverse(self, z: f64) -> f64 {
        match self {
            Transform::Linear => z,
            Transform::Log => z.exp(),
        }
    }

    /// `dx/dz` at `x`.
    pub(crate) fn derivative(self, x: f64) -> f64 {
        match self {
            Transform::Linear => 1.0,
            Transform::Log => x,
        }
    }
}

impl FromStr for Transform {
    type Err = InversionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Transform::Linear),
            "log" => Ok(Transform::Log),
            other => Err(InversionError::Problem(format!(
                "unknown transform `{other}`"
            ))),
        }
    }
}

/// Parameter declaration. Equal bounds hold the parameter fixed at its
/// initial value.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeParam {
    pub name: String,
    pub initial: f64,
    pub lower: f64,
    pub upper: f64,
    pub transform: Transform,
}

impl FreeParam {
    pub fn new(name: impl Into<String>, initial: f64, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            initial,
            lower,
            upper,
            transform: Transform::Linear,
        }
    }

    pub fn log(mut self) -> Self {
        self.transform = Transform::Log;
        self
    }

    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative central-difference step.
    pub jacobian_step: f64,
    pub step_tolerance: f64,
    pub cost_tolerance: f64,
    pub initial_damping: f64,
    /// Parameters whose relative sensitivity falls below this are weak.
    pub sensitivity_threshold: f64,
    /// Parameters that push the normalized Jacobian condition number above
    /// this are weak.
    pub condition_threshold: f64,
    /// Velocity uncertainty for measured points without their own (m/s).
    pub default_sigma: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            jacobian_step: 1e-4,
            step_tolerance: 1e-6,
            cost_tolerance: 1e-10,
            initial_damping: 1e-3,
            sensitivity_threshold: 1e-3,
            condition_threshold: 50.0,
            default_sigma: None,
        }
    }
}

/// Measured curve, parameterized stack and the parameters to adjust.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub template: StackTemplate,
    pub params: Vec<FreeParam>,
    pub measured: DispersionCurve,
    pub options: FitOptions,
    pub(crate) targets: Vec<ParamTarget>,
    pub(crate) sigmas: Vec<f64>,
}

impl FitProblem {
    pub fn new(
        template: StackTemplate,
        params: Vec<FreeParam>,
        measured: DispersionCurve,
        options: FitOptions,
    ) -> Result<Self, InversionError> {
        let mut targets = Vec::with_capacity(params.len());
        for p in &params {
            let t = template.target(&p.name)?;
            if targets.contains(&t) {
                return Err(InversionError::Problem(format!(
                    "parameter `{}` declared twice",
                    p.name
                )));
            }
            if !(p.lower <= p.upper) || !p.lower.is_finite() || !p.upper.is_finite() {
                return Err(InversionError::Problem(format!(
                    "bounds of `{}` are not ordered",
                    p.name
                )));
            }
            if !(p.initial >= p.lower && p.initial <= p.upper) {
                return Err(InversionError::OutOfBounds {
                    name: p.name.clone(),
                    value: p.initial,
                    lower: p.lower,
                    upper: p.upper,
                });
            }
            if p.transform == Transform::Log && !(p.lower > 0.0) {
                return Err(InversionError::Problem(format!(
                    "log transform of `{}` needs a positive lower bound",
                    p.name
                )));
            }
            targets.push(t);
        }
        let n_free = params.iter().filter(|p| !p.is_fixed()).count();
        if n_free == 0 {
            return Err(InversionError::Problem("no free parameters".into()));
        }
        if measured.len() < n_free {
            return Err(InversionError::Problem(format!(
                "{} measured points for {} free parameters",
                measured.len(),
                n_free
            )));
        }
        let mut sigmas = Vec::with_capacity(measured.len());
        for (i, p) in measured.points().iter().enumerate() {
            let s = p.sigma.or(options.default_sigma).ok_or_else(|| {
                InversionError::Problem(format!(
                    "measured point {} has no sigma and no default is set",
                    i + 1
                ))
            })?;
            if !(s > 0.0 && s.is_finite()) {
                return Err(InversionError::Problem(format!(
                    "measured point {} has sigma {s}",
                    i + 1
                )));
            }
            sigmas.push(s);
        }
        // The initial stack must be physical.
        let problem = Self {
            template,
            params,
            measured,
            options,
            targets,
            sigmas,
        };
        problem.stack_at(&problem.initial_values())?;
        Ok(problem)
    }

    pub fn initial_values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.initial).collect()
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// Index of a declared parameter.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub(crate) fn check_bounds(&self, values: &[f64]) -> Result<(), InversionError> {
        if values.len() != self.params.len() {
            return Err(InversionError::Problem(format!(
                "{} values for {} parameters",
                values.len(),
                self.params.len()
            )));
        }
        for (p, &v) in self.params.iter().zip(values) {
            if !(v >= p.lower && v <= p.upper) {
                return Err(InversionError::OutOfBounds {
                    name: p.name.clone(),
                    value: v,
                    lower: p.lower,
                    upper: p.upper,
                });
            }
        }
        Ok(())
    }

    /// Stack with the given parameter values (declared order).
    pub fn stack_at(&self, values: &[f64]) -> Result<LayerStack, InversionError> {
        let assignments: Vec<_> = self
            .targets
            .iter()
            .copied()
            .zip(values.iter().copied())
            .collect();
        Ok(self.template.with(&assignments).stack()?)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}
