//! Mask-excited narrowband SAW signals: synthesis, spectra, harmonic peak
//! extraction, conversion to phase-velocity points and SLM projection-ratio
//! calibration.

mod calibration;
mod io;
mod peaks;
mod spectrum;
mod synth;

use thiserror::Error;

pub use calibration::{calibrate_projection_ratio, slm_wavelength, ProjectionCalibration, SlmSpec};
pub use io::{read_waveform_csv, spectrum_csv, write_waveform_csv};
pub use peaks::{
    estimate_fundamental, minus_3db_width, pick_harmonic_peaks, pick_mask_harmonics, vph_points,
    HarmonicPeak, Omission, PeakReport, FUNDAMENTAL_SNR,
};
pub use spectrum::{spectrum, Spectrum, Window};
pub use synth::{harmonic_frequency, synthesize_slope_signal, SynthesisParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(
        "dispersion curve does not cover {lo:.6e}..{hi:.6e} Hz needed for harmonic {harmonic}"
    )]
    CoverageGap { harmonic: usize, lo: f64, hi: f64 },
    #[error("noise requested without a seed")]
    MissingSeed,
    #[error("no fundamental peak near {hint:.6e} Hz")]
    NoFundamental { hint: f64 },
    #[error("line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    GlassMask,
    Slm,
}

/// Periodic illumination pattern projected onto the sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSpec {
    /// Grating period on the sample surface (m).
    pub period: f64,
    /// Bar width over period.
    pub duty: f64,
    pub n_periods: usize,
    pub kind: MaskKind,
}

impl MaskSpec {
    pub fn new(
        period: f64,
        duty: f64,
        n_periods: usize,
        kind: MaskKind,
    ) -> Result<Self, SignalError> {
        let m = Self {
            period,
            duty,
            n_periods,
            kind,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(SignalError::InvalidInput(
                "mask period must be positive".into(),
            ));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(SignalError::InvalidInput(
                "mask duty must lie in (0, 1)".into(),
            ));
        }
        if self.n_periods < 2 {
            return Err(SignalError::InvalidInput(
                "mask needs at least two periods".into(),
            ));
        }
        Ok(())
    }

    /// Relative slope amplitude of spatial harmonic `n` for an ideal square
    /// grating: Fourier coefficient `2 sin(n pi duty) / (n pi)` times the
    /// wavenumber factor `n`.
    pub fn harmonic_weight(&self, n: usize) -> f64 {
        let s = (n as f64 * std::f64::consts::PI * self.duty).sin();
        if s.abs() < 1e-12 {
            0.0
        } else {
            2.0 * s / std::f64::consts::PI
        }
    }
}

/// Time-sampled surface-slope signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    /// Hz
    pub sample_rate: f64,
    /// Source-to-probe distance (m).
    pub distance: f64,
    pub seed: Option<u64>,
    /// Mask that generated the signal, when known.
    pub mask: Option<MaskSpec>,
}

impl Waveform {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

#[cfg(test)]
mod tests;
