//! Forward model: partial waves per medium, the global boundary system, the
//! surface Green's function `G33` and the search for its pole in phase
//! velocity.
//!
//! Each medium's depth dependence is the eigenproblem of a real 6x6 operator
//! acting on `[u; t]` field vectors. All interface and free-surface
//! conditions are assembled into one matrix, so no transfer-matrix products
//! are formed and depth exponentials stay bounded by one.

mod boundary;
mod partial;
mod rayleigh;
mod search;

use thiserror::Error;

use crate::materials::MaterialError;
use crate::scalar::Real;

pub use boundary::{boundary_matrix, surface_green_g33, BoundaryMatrix, GreenResponse};
pub use partial::{
    bulk_velocities_x1, partial_waves, PartialWave, PartialWaveSet, WaveKind, TRACTION_SCALE,
};
pub use rayleigh::rayleigh_velocity_isotropic;
pub use search::{
    dispersion_curve, dispersion_curve_near, sagittal_limiting_velocity, saw_phase_velocity,
    search_window, JUMP_TOL, SCAN_STEP,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DispersionError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("defective partial-wave eigensystem at v = {velocity} m/s")]
    DegeneratePoint { velocity: f64 },
    #[error("substrate does not support three evanescent partial waves at v = {velocity} m/s")]
    NotSubsonic { velocity: f64 },
    #[error(
        "no surface mode at {frequency} Hz in the scanned window {v_min}..{v_max} m/s \
         (smallest |indicator| {min_abs_indicator:e})"
    )]
    NoMode {
        frequency: f64,
        v_min: f64,
        v_max: f64,
        min_abs_indicator: f64,
    },
    #[error("{} point(s) failed, first at index {} ({} Hz): {}", .0.len(), .0[0].index, .0[0].frequency, .0[0].error)]
    Points(Vec<PointFailure>),
    #[error("line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub index: usize,
    pub frequency: f64,
    pub error: Box<DispersionError>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<T> {
    /// Hz
    pub frequency: T,
    /// m/s
    pub velocity: T,
    /// m/s
    pub sigma: Option<T>,
}

/// Sampled phase velocity versus frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCurve<T: Real> {
    points: Vec<CurvePoint<T>>,
    jumps: Vec<usize>,
}

impl<T: Real> DispersionCurve<T> {
    pub fn new(points: Vec<CurvePoint<T>>) -> Result<Self, DispersionError> {
        for (i, p) in points.iter().enumerate() {
            if !(p.frequency > T::zero()) || !p.frequency.is_finite() {
                return Err(DispersionError::InvalidInput(format!(
                    "point {i}: frequency must be positive"
                )));
            }
            if !(p.velocity > T::zero()) || !p.velocity.is_finite() {
                return Err(DispersionError::InvalidInput(format!(
                    "point {i}: velocity must be positive"
                )));
            }
            if let Some(s) = p.sigma {
                if !(s > T::zero()) || !s.is_finite() {
                    return Err(DispersionError::InvalidInput(format!(
                        "point {i}: sigma must be positive"
                    )));
                }
            }
            if i > 0 && !(p.frequency > points[i - 1].frequency) {
                return Err(DispersionError::InvalidInput(format!(
                    "point {i}: frequencies must be strictly increasing"
                )));
            }
        }
        Ok(Self {
            points,
            jumps: Vec::new(),
        })
    }

    pub fn empty() -> Self {
        Self {
            points: Vec::new(),
            jumps: Vec::new(),
        }
    }

    /// Builds a curve from unordered points; duplicate frequencies keep the
    /// point with the smaller uncertainty.
    pub fn from_unsorted(mut points: Vec<CurvePoint<T>>) -> Result<Self, DispersionError> {
        points.sort_by(|a, b| {
            a.frequency
                .partial_cmp(&b.frequency)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut out: Vec<CurvePoint<T>> = Vec::with_capacity(points.len());
        for p in points {
            match out.last_mut() {
                Some(last) if last.frequency == p.frequency => {
                    let better = match (p.sigma, last.sigma) {
                        (Some(a), Some(b)) => a < b,
                        (Some(_), None) => true,
                        _ => false,
                    };
                    if better {
                        *last = p;
                    }
                }
                _ => out.push(p),
            }
        }
        Self::new(out)
    }

    pub fn points(&self) -> &[CurvePoint<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn frequencies(&self) -> Vec<T> {
        self.points.iter().map(|p| p.frequency).collect()
    }

    pub fn velocities(&self) -> Vec<T> {
        self.points.iter().map(|p| p.velocity).collect()
    }

    /// Indices `i` where `|v[i] - v[i-1]| / v[i-1]` exceeded the tracking
    /// tolerance when the curve was computed.
    pub fn jumps(&self) -> &[usize] {
        &self.jumps
    }

    pub(crate) fn flag_jumps(&mut self, tol: T) {
        self.jumps = (1..self.points.len())
            .filter(|&i| {
                let a = self.points[i - 1].velocity;
                ((self.points[i].velocity - a) / a).abs() > tol
            })
            .collect();
    }

    pub fn with_sigma(mut self, sigma: impl Fn(&CurvePoint<T>) -> T) -> Self {
        for p in &mut self.points {
            p.sigma = Some(sigma(p));
        }
        self
    }

    /// Linear interpolation of the velocity; `None` outside the sampled band.
    pub fn interpolate(&self, frequency: T) -> Option<T> {
        let pts = &self.points;
        let first = pts.first()?;
        let last = pts.last()?;
        if frequency < first.frequency || frequency > last.frequency {
            return None;
        }
        let idx = pts.partition_point(|p| p.frequency < frequency);
        if idx == 0 {
            return Some(first.velocity);
        }
        let (a, b) = (&pts[idx - 1], &pts[idx.min(pts.len() - 1)]);
        if b.frequency == a.frequency {
            return Some(b.velocity);
        }
        let t = (frequency - a.frequency) / (b.frequency - a.frequency);
        Some(a.velocity + (b.velocity - a.velocity) * t)
    }

    pub fn frequency_range(&self) -> Option<(T, T)> {
        Some((
            self.points.first()?.frequency,
            self.points.last()?.frequency,
        ))
    }
}

pub const CSV_HEADER: &str = "frequency_hz,phase_velocity_m_per_s";
pub const CSV_HEADER_SIGMA: &str = "frequency_hz,phase_velocity_m_per_s,sigma_m_per_s";

impl DispersionCurve<f64> {
    /// CSV text with LF line endings; the sigma column is written when every
    /// point carries an uncertainty.
    pub fn to_csv(&self) -> String {
        let with_sigma = !self.points.is_empty() && self.points.iter().all(|p| p.sigma.is_some());
        let mut out = String::new();
        out.push_str(if with_sigma {
            CSV_HEADER_SIGMA
        } else {
            CSV_HEADER
        });
        out.push('\n');
        for p in &self.points {
            match (with_sigma, p.sigma) {
                (true, Some(s)) => out.push_str(&format!("{},{},{}\n", p.frequency, p.velocity, s)),
                _ => out.push_str(&format!("{},{}\n", p.frequency, p.velocity)),
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, DispersionError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (_, header) = lines.next().ok_or(DispersionError::Csv {
            line: 1,
            reason: "missing header".into(),
        })?;
        let with_sigma = match header.trim() {
            CSV_HEADER => false,
            CSV_HEADER_SIGMA => true,
            other => {
                return Err(DispersionError::Csv {
                    line: 1,
                    reason: format!("unexpected header `{other}`"),
                })
            }
        };
        let mut points = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let cols: Vec<&str> = line.trim().split(',').collect();
            let expected = if with_sigma { 3 } else { 2 };
            if cols.len() != expected {
                return Err(DispersionError::Csv {
                    line: line_no,
                    reason: format!("expected {expected} columns, found {}", cols.len()),
                });
            }
            let num = |s: &str| -> Result<f64, DispersionError> {
                s.trim().parse::<f64>().map_err(|_| DispersionError::Csv {
                    line: line_no,
                    reason: format!("`{s}` is not a number"),
                })
            };
            let point = CurvePoint {
                frequency: num(cols[0])?,
                velocity: num(cols[1])?,
                sigma: if with_sigma {
                    Some(num(cols[2])?)
                } else {
                    None
                },
            };
            let bad = |reason: &str| DispersionError::Csv {
                line: line_no,
                reason: reason.to_string(),
            };
            if !(point.frequency > 0.0 && point.frequency.is_finite()) {
                return Err(bad("frequency must be positive"));
            }
            if !(point.velocity > 0.0 && point.velocity.is_finite()) {
                return Err(bad("velocity must be positive"));
            }
            if point.sigma.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
                return Err(bad("sigma must be positive"));
            }
            if points
                .last()
                .is_some_and(|p: &CurvePoint<f64>| !(point.frequency > p.frequency))
            {
                return Err(bad("frequencies must be strictly increasing"));
            }
            points.push(point);
        }
        Self::new(points)
    }
}

#[cfg(test)]
mod tests;
