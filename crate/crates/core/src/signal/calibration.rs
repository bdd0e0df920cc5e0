use super::SignalError;

/// Spatial light modulator projecting a grating through demagnifying optics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlmSpec {
    /// Pixel pitch on the modulator (m).
    pub pixel_pitch: f64,
    /// Grating period in pixels.
    pub period_pixels: u32,
    /// Demagnification from modulator to sample.
    pub projection_ratio: f64,
    /// One-sigma uncertainty of `projection_ratio`; zero when unknown.
    pub ratio_sigma: f64,
}

impl SlmSpec {
    pub fn validate(&self) -> Result<(), SignalError> {
        if !(self.pixel_pitch > 0.0 && self.pixel_pitch.is_finite()) {
            return Err(SignalError::InvalidInput(
                "pixel pitch must be positive".into(),
            ));
        }
        if self.period_pixels < 2 {
            return Err(SignalError::InvalidInput(
                "period must span at least two pixels".into(),
            ));
        }
        if !(self.projection_ratio > 0.0 && self.projection_ratio.is_finite()) {
            return Err(SignalError::InvalidInput(
                "projection ratio must be positive".into(),
            ));
        }
        if !(self.ratio_sigma >= 0.0) {
            return Err(SignalError::InvalidInput(
                "projection ratio sigma must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Grating period on the sample surface.
pub fn slm_wavelength(slm: &SlmSpec) -> Result<f64, SignalError> {
    slm.validate()?;
    Ok(slm.pixel_pitch * slm.period_pixels as f64 / slm.projection_ratio)
}

impl SlmSpec {
    /// Projected grating as a mask of `n_periods` periods with the given duty.
    pub fn mask(&self, duty: f64, n_periods: usize) -> Result<super::MaskSpec, SignalError> {
        super::MaskSpec::new(slm_wavelength(self)?, duty, n_periods, super::MaskKind::Slm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionCalibration {
    pub ratio: f64,
    /// Standard error of the mean; `None` from a single measurement.
    pub sigma: Option<f64>,
    pub per_measurement: Vec<f64>,
}

/// Projection ratio from fundamental frequencies measured on a reference
/// sample of known velocity. Each `(period_pixels, frequency)` pair gives
/// `r = pitch * period_pixels * f / v_reference`; the estimate is their mean.
pub fn calibrate_projection_ratio(
    measurements: &[(u32, f64)],
    pixel_pitch: f64,
    v_reference: f64,
) -> Result<ProjectionCalibration, SignalError> {
    if measurements.is_empty() {
        return Err(SignalError::InvalidInput(
            "no calibration measurements".into(),
        ));
    }
    if !(pixel_pitch > 0.0 && v_reference > 0.0) {
        return Err(SignalError::InvalidInput(
            "pixel pitch and reference velocity must be positive".into(),
        ));
    }
    let mut per = Vec::with_capacity(measurements.len());
    for &(p, f) in measurements {
        if p == 0 || !(f > 0.0 && f.is_finite()) {
            return Err(SignalError::InvalidInput(format!(
                "invalid measurement: period {p} px, frequency {f} Hz"
            )));
        }
        per.push(pixel_pitch * p as f64 * f / v_reference);
    }
    let n = per.len() as f64;
    let ratio = per.iter().sum::<f64>() / n;
    let sigma = (per.len() > 1).then(|| {
        let var = per.iter().map(|r| (r - ratio).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    });
    Ok(ProjectionCalibration {
        ratio,
        sigma,
        per_measurement: per,
    })
}
