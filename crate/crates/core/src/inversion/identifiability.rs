use nalgebra::DMatrix;

use super::solver::{free_indices, jacobian_at};
use super::{FitProblem, InversionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identifiability {
    WellDetermined,
    WeaklyDetermined,
    Fixed,
}

impl Identifiability {
    pub fn label(self) -> &'static str {
        match self {
            Identifiability::WellDetermined => "well-determined",
            Identifiability::WeaklyDetermined => "weakly-determined",
            Identifiability::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDiagnostic {
    pub name: String,
    /// Norm of the residual response to a relative change of the parameter,
    /// over the largest such norm among the free parameters.
    pub relative_sensitivity: f64,
    /// Condition number of the column-normalized Jacobian restricted to the
    /// well-determined parameters declared before this one plus itself.
    pub condition: f64,
    pub flag: Identifiability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiabilityReport {
    pub params: Vec<ParamDiagnostic>,
    /// Singular values of the column-normalized Jacobian over all free
    /// parameters, descending.
    pub singular_values: Vec<f64>,
    pub condition_number: f64,
}

impl IdentifiabilityReport {
    pub fn weak(&self) -> Vec<&str> {
        self.params
            .iter()
            .filter(|p| p.flag == Identifiability::WeaklyDetermined)
            .map(|p| p.name.as_str())
            .collect()
    }

    pub fn flag(&self, name: &str) -> Option<Identifiability> {
        self.params.iter().find(|p| p.name == name).map(|p| p.flag)
    }

    pub fn recommendation(&self) -> Option<String> {
        let weak = self.weak();
        (!weak.is_empty()).then(|| format!("consider fixing: {}", weak.join(", ")))
    }
}

fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Parameters are examined in declaration order; each one is weak when its
/// relative sensitivity is below the threshold or when adding it to the
/// well-determined set lifts the normalized condition number above the
/// threshold.
pub(crate) fn from_jacobian(
    problem: &FitProblem,
    free: &[usize],
    x: &[f64],
    jac_z: &DMatrix<f64>,
    dx_dz: impl Fn(usize) -> f64,
) -> IdentifiabilityReport {
    let n = jac_z.nrows();
    // Columns as response to relative parameter changes.
    let mut js = DMatrix::zeros(n, free.len());
    for (k, &i) in free.iter().enumerate() {
        let p = &problem.params[i];
        let scale = if x[i] != 0.0 {
            x[i].abs()
        } else {
            p.upper - p.lower
        };
        let factor = scale / dx_dz(k);
        for r in 0..n {
            js[(r, k)] = jac_z[(r, k)] * factor;
        }
    }
    let norms: Vec<f64> = (0..free.len()).map(|k| js.column(k).norm()).collect();
    let max_norm = norms.iter().cloned().fold(0.0, f64::max);
    let mut normalized = js.clone();
    for (k, &nk) in norms.iter().enumerate() {
        if nk > 0.0 {
            normalized.column_mut(k).scale_mut(1.0 / nk);
        }
    }
    let opts = &problem.options;
    let mut accepted: Vec<usize> = Vec::new();
    let mut by_param: Vec<Option<ParamDiagnostic>> = vec![None; problem.params.len()];
    for (k, &i) in free.iter().enumerate() {
        let sens = if max_norm > 0.0 {
            norms[k] / max_norm
        } else {
            0.0
        };
        let mut cols = accepted.clone();
        cols.push(k);
        let sub = normalized.select_columns(&cols);
        let cond = if norms[k] > 0.0 {
            condition(&sub)
        } else {
            f64::INFINITY
        };
        let weak = !(sens >= opts.sensitivity_threshold) || !(cond <= opts.condition_threshold);
        if !weak {
            accepted.push(k);
        }
        by_param[i] = Some(ParamDiagnostic {
            name: problem.params[i].name.clone(),
            relative_sensitivity: sens,
            condition: cond,
            flag: if weak {
                Identifiability::WeaklyDetermined
            } else {
                Identifiability::WellDetermined
            },
        });
    }
    let params = problem
        .params
        .iter()
        .zip(by_param)
        .map(|(p, d)| {
            d.unwrap_or_else(|| ParamDiagnostic {
                name: p.name.clone(),
                relative_sensitivity: 0.0,
                condition: 1.0,
                flag: Identifiability::Fixed,
            })
        })
        .collect();
    let mut singular_values: Vec<f64> = if free.is_empty() {
        Vec::new()
    } else {
        normalized.singular_values().iter().cloned().collect()
    };
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let condition_number = if free.is_empty() {
        1.0
    } else {
        condition(&normalized)
    };
    IdentifiabilityReport {
        params,
        singular_values,
        condition_number,
    }
}

/// Sensitivity and conditioning diagnostics at `values` (declared order).
pub fn identifiability_report(
    problem: &FitProblem,
    values: &[f64],
) -> Result<IdentifiabilityReport, InversionError> {
    problem.check_bounds(values)?;
    let free = free_indices(problem);
    let jac = jacobian_at(problem, values)?;
    Ok(from_jacobian(problem, &free, values, &jac, |k| {
        problem.params[free[k]]
            .transform
            .derivative(values[free[k]])
    }))
}
