use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::identifiability::{from_jacobian, IdentifiabilityReport};
use super::{FitProblem, InversionError};
use crate::dispersion::{dispersion_curve, dispersion_curve_near};

const MAX_DAMPING: f64 = 1e16;
const MIN_DAMPING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceStatus {
    /// Relative parameter step fell below tolerance.
    StepTolerance,
    /// Relative cost decrease fell below tolerance.
    CostTolerance,
    /// Residuals vanished.
    ZeroResidual,
    /// No damping level produced a decrease.
    Stalled,
    IterationCap,
}

impl ConvergenceStatus {
    pub fn converged(self) -> bool {
        matches!(
            self,
            ConvergenceStatus::StepTolerance
                | ConvergenceStatus::CostTolerance
                | ConvergenceStatus::ZeroResidual
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    /// One-sigma uncertainty from the linearized problem.
    pub sigma: f64,
    pub unit: &'static str,
    pub fixed: bool,
    /// Ended on (or within 1e-9 of) a bound.
    pub at_bound: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub frequency: f64,
    pub measured: f64,
    pub model: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub estimates: Vec<Estimate>,
    /// Covariance in physical units over all declared parameters; rows and
    /// columns of fixed parameters are zero.
    pub covariance: DMatrix<f64>,
    /// Unweighted RMS of model minus measured velocity (m/s).
    pub residual_rms: f64,
    /// RMS of the sigma-weighted residuals.
    pub weighted_rms: f64,
    pub n_iterations: usize,
    pub status: ConvergenceStatus,
    pub identifiability: IdentifiabilityReport,
    pub residuals: Vec<ResidualRow>,
    /// Infinity norm of `J^T r` at the start and at the end.
    pub gradient_start: f64,
    pub gradient_end: f64,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.estimates
            .iter()
            .find(|e| e.name == name)
            .map(|e| e.value)
    }

    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

/// Model velocities at the measured frequencies.
fn model_velocities(
    problem: &FitProblem,
    values: &[f64],
    guesses: Option<&[f64]>,
) -> Result<Vec<f64>, InversionError> {
    let stack = problem.stack_at(values)?;
    let freqs = problem.measured.frequencies();
    if let Some(g) = guesses {
        if let Ok(c) = dispersion_curve_near(&stack, &freqs, g) {
            return Ok(c.velocities());
        }
    }
    Ok(dispersion_curve(&stack, &freqs)?.velocities())
}

fn weighted(problem: &FitProblem, model: &[f64]) -> Vec<f64> {
    problem
        .measured
        .points()
        .iter()
        .zip(model)
        .zip(problem.sigmas())
        .map(|((p, m), s)| (m - p.velocity) / s)
        .collect()
}

/// `(v_model - v_measured) / sigma` at each measured point.
pub fn residuals(problem: &FitProblem, values: &[f64]) -> Result<Vec<f64>, InversionError> {
    problem.check_bounds(values)?;
    let model = model_velocities(problem, values, None)?;
    Ok(weighted(problem, &model))
}

/// Optimizer state over the free parameters in transformed coordinates.
struct Space<'a> {
    problem: &'a FitProblem,
    free: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<'a> Space<'a> {
    fn new(problem: &'a FitProblem) -> Self {
        let free: Vec<usize> = (0..problem.params.len())
            .filter(|&i| !problem.params[i].is_fixed())
            .collect();
        let lo = free
            .iter()
            .map(|&i| problem.params[i].transform.forward(problem.params[i].lower))
            .collect();
        let hi = free
            .iter()
            .map(|&i| problem.params[i].transform.forward(problem.params[i].upper))
            .collect();
        Self {
            problem,
            free,
            lo,
            hi,
        }
    }

    fn z_of(&self, x: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .map(|&i| self.problem.params[i].transform.forward(x[i]))
            .collect()
    }

    fn x_of(&self, z: &[f64], template: &[f64]) -> Vec<f64> {
        let mut x = template.to_vec();
        for (k, &i) in self.free.iter().enumerate() {
            let p = &self.problem.params[i];
            x[i] = p.transform.inverse(z[k]).clamp(p.lower, p.upper);
        }
        x
    }

    fn scale(&self, k: usize, z: f64) -> f64 {
        z.abs()
            .max(1e-6 * (self.hi[k] - self.lo[k]))
            .max(f64::MIN_POSITIVE)
    }

    /// Central-difference Jacobian of the weighted residuals in `z`.
    fn jacobian(
        &self,
        z: &[f64],
        x: &[f64],
        model: &[f64],
    ) -> Result<DMatrix<f64>, InversionError> {
        let step = self.problem.options.jacobian_step;
        let cols: Vec<(f64, f64, f64)> = z
            .iter()
            .enumerate()
            .map(|(k, &zk)| {
                let p = &self.problem.params[self.free[k]];
                let h = match p.transform {
                    super::Transform::Log => step,
                    super::Transform::Linear => {
                        step * zk.abs().max(1e-3 * (self.hi[k] - self.lo[k]))
                    }
                };
                let plus = (zk + h).min(self.hi[k]);
                let minus = (zk - h).max(self.lo[k]);
                (plus, minus, zk)
            })
            .collect();
        let tasks: Vec<(usize, bool)> =
            (0..z.len()).flat_map(|k| [(k, true), (k, false)]).collect();
        let evals: Vec<Result<Vec<f64>, InversionError>> = tasks
            .par_iter()
            .map(|&(k, up)| {
                let (plus, minus, zk) = cols[k];
                let target = if up { plus } else { minus };
                if target == zk {
                    return Ok(model.to_vec());
                }
                let mut zz = z.to_vec();
                zz[k] = target;
                model_velocities(self.problem, &self.x_of(&zz, x), Some(model))
            })
            .collect();
        let mut evals = evals.into_iter();
        let n = self.problem.measured.len();
        let mut j = DMatrix::zeros(n, z.len());
        for k in 0..z.len() {
            let up = evals.next().expect("two evaluations per column")?;
            let down = evals.next().expect("two evaluations per column")?;
            let (plus, minus, _) = cols[k];
            let width = plus - minus;
            if width <= 0.0 {
                continue;
            }
            for i in 0..n {
                j[(i, k)] = (up[i] - down[i]) / (self.problem.sigmas()[i] * width);
            }
        }
        Ok(j)
    }
}

fn half_norm2(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Weighted least squares by damped Gauss-Newton with box bounds.
pub fn fit_parameters(problem: &FitProblem) -> Result<FitResult, InversionError> {
    let opts = problem.options;
    let space = Space::new(problem);
    let mut x = problem.initial_values();
    let mut z = space.z_of(&x);
    let mut model = model_velocities(problem, &x, None)?;
    let mut r = weighted(problem, &model);
    let mut cost = half_norm2(&r);
    let mut jac = space.jacobian(&z, &x, &model)?;
    let gradient_start = inf_norm(&(jac.transpose() * DVector::from_column_slice(&r)));
    let mut damping = opts.initial_damping;
    let mut status = ConvergenceStatus::IterationCap;
    let mut iterations = 0;

    if cost == 0.0 {
        status = ConvergenceStatus::ZeroResidual;
    }
    while status == ConvergenceStatus::IterationCap && iterations < opts.max_iterations {
        iterations += 1;
        let rv = DVector::from_column_slice(&r);
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * rv;
        loop {
            let mut m = a.clone();
            for k in 0..m.nrows() {
                m[(k, k)] += damping * a[(k, k)].max(1e-300);
            }
            let Some(chol) = m.cholesky() else {
                damping *= 10.0;
                if damping > MAX_DAMPING {
                    status = ConvergenceStatus::Stalled;
                    break;
                }
                continue;
            };
            let delta = chol.solve(&(-&g));
            let z_new: Vec<f64> = z
                .iter()
                .zip(delta.iter())
                .enumerate()
                .map(|(k, (zk, dk))| (zk + dk).clamp(space.lo[k], space.hi[k]))
                .collect();
            let rel_step = z_new
                .iter()
                .zip(&z)
                .enumerate()
                .map(|(k, (a, b))| (a - b).abs() / space.scale(k, *b))
                .fold(0.0, f64::max);
            let x_new = space.x_of(&z_new, &x);
            let trial = model_velocities(problem, &x_new, Some(&model)).map(|mv| {
                let rn = weighted(problem, &mv);
                (mv, rn)
            });
            let improved = match &trial {
                Ok((_, rn)) => half_norm2(rn) < cost,
                Err(_) => false,
            };
            if improved {
                let (mv, rn) = trial.expect("checked");
                let new_cost = half_norm2(&rn);
                let rel_cost = (cost - new_cost) / cost;
                x = x_new;
                z = z_new;
                model = mv;
                r = rn;
                cost = new_cost;
                jac = space.jacobian(&z, &x, &model)?;
                damping = (damping / 10.0).max(MIN_DAMPING);
                if cost == 0.0 {
                    status = ConvergenceStatus::ZeroResidual;
                } else if rel_step < opts.step_tolerance {
                    status = ConvergenceStatus::StepTolerance;
                } else if rel_cost < opts.cost_tolerance {
                    status = ConvergenceStatus::CostTolerance;
                }
                break;
            }
            if rel_step < opts.step_tolerance {
                status = ConvergenceStatus::StepTolerance;
                break;
            }
            damping *= 10.0;
            if damping > MAX_DAMPING {
                status = ConvergenceStatus::Stalled;
                break;
            }
        }
    }

    let gradient_end = inf_norm(&(jac.transpose() * DVector::from_column_slice(&r)));
    let identifiability = from_jacobian(problem, &space.free, &x, &jac, |k| {
        problem.params[space.free[k]]
            .transform
            .derivative(x[space.free[k]])
    });

    // Covariance in z, mapped to x.
    let cov_z = (jac.transpose() * &jac)
        .pseudo_inverse(1e-14)
        .unwrap_or_else(|_| DMatrix::from_element(space.free.len(), space.free.len(), f64::NAN));
    let n = problem.params.len();
    let mut covariance = DMatrix::zeros(n, n);
    for (a, &ia) in space.free.iter().enumerate() {
        let da = problem.params[ia].transform.derivative(x[ia]);
        for (b, &ib) in space.free.iter().enumerate() {
            let db = problem.params[ib].transform.derivative(x[ib]);
            covariance[(ia, ib)] = da * cov_z[(a, b)] * db;
        }
    }
    let covariance = 0.5 * (&covariance + covariance.transpose());

    let estimates = problem
        .params
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let span = p.upper - p.lower;
            Estimate {
                name: p.name.clone(),
                value: x[i],
                sigma: covariance[(i, i)].max(0.0).sqrt(),
                unit: problem.targets[i].quantity.unit(),
                fixed: p.is_fixed(),
                at_bound: !p.is_fixed()
                    && ((x[i] - p.lower).abs() <= 1e-9 * span.max(x[i].abs())
                        || (p.upper - x[i]).abs() <= 1e-9 * span.max(x[i].abs())),
            }
        })
        .collect();

    let residual_rows: Vec<ResidualRow> = problem
        .measured
        .points()
        .iter()
        .zip(&model)
        .zip(problem.sigmas())
        .map(|((p, &m), &s)| ResidualRow {
            frequency: p.frequency,
            measured: p.velocity,
            model: m,
            sigma: s,
        })
        .collect();
    let npts = residual_rows.len() as f64;
    let residual_rms = (residual_rows
        .iter()
        .map(|r| (r.model - r.measured).powi(2))
        .sum::<f64>()
        / npts)
        .sqrt();
    let weighted_rms = (2.0 * cost / npts).sqrt();

    Ok(FitResult {
        estimates,
        covariance,
        residual_rms,
        weighted_rms,
        n_iterations: iterations,
        status,
        identifiability,
        residuals: residual_rows,
        gradient_start,
        gradient_end,
    })
}

/// Weighted Jacobian with respect to the free parameters in their
/// transformed coordinates, evaluated at `values`.
pub(crate) fn jacobian_at(
    problem: &FitProblem,
    values: &[f64],
) -> Result<DMatrix<f64>, InversionError> {
    let space = Space::new(problem);
    let model = model_velocities(problem, values, None)?;
    space.jacobian(&space.z_of(values), values, &model)
}

pub(crate) fn free_indices(problem: &FitProblem) -> Vec<usize> {
    Space::new(problem).free
}
