use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{MaskSpec, SignalError, Waveform};
use crate::DispersionCurve;

/// Acquisition and excitation settings for [`synthesize_slope_signal`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisParams {
    /// Source-to-probe distance (m).
    pub distance: f64,
    /// Full width at half maximum of the excitation pulse (s).
    pub pulse_fwhm: f64,
    /// Hz
    pub sample_rate: f64,
    /// Record length (s); sized automatically when `None`.
    pub duration: Option<f64>,
    /// Noise RMS as a fraction of the peak clean amplitude.
    pub noise_rms: f64,
    pub seed: Option<u64>,
    /// Highest harmonic frequency to synthesize; defaults to the upper end of
    /// the dispersion curve or 0.45 of the sample rate, whichever is lower.
    pub max_frequency: Option<f64>,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        Self {
            distance: 5e-3,
            pulse_fwhm: 1.2e-9,
            sample_rate: 2e9,
            duration: None,
            noise_rms: 0.0,
            seed: None,
            max_frequency: None,
        }
    }
}

/// Solves `f = n v(f) / period` on the curve by fixed-point iteration.
/// Returns `Ok(None)` when the harmonic lies above the curve.
pub fn harmonic_frequency(
    curve: &DispersionCurve,
    period: f64,
    n: usize,
) -> Result<Option<f64>, SignalError> {
    let (f_lo, f_hi) = curve
        .frequency_range()
        .ok_or_else(|| SignalError::InvalidInput("empty dispersion curve".into()))?;
    let wavelength = period / n as f64;
    let mut f = curve.points()[0].velocity / wavelength;
    for _ in 0..200 {
        if f < f_lo {
            // Velocities can only shrink the estimate so much; test the
            // lower edge before declaring a gap.
            let at_lo = curve.points()[0].velocity / wavelength;
            if at_lo < f_lo {
                return Err(SignalError::CoverageGap {
                    harmonic: n,
                    lo: at_lo,
                    hi: f_lo,
                });
            }
            f = f_lo;
        }
        let Some(v) = curve.interpolate(f.min(f_hi)) else {
            return Ok(None);
        };
        let next = v / wavelength;
        if next > f_hi {
            return Ok(None);
        }
        if (next - f).abs() <= 1e-12 * f {
            return Ok(Some(next));
        }
        f = next;
    }
    Ok(Some(f))
}

fn pulse_spectrum(f: f64, fwhm: f64) -> f64 {
    let x = std::f64::consts::PI * f * fwhm;
    (-(x * x) / (4.0 * std::f64::consts::LN_2)).exp()
}

/// Slope signal of a mask-excited wavetrain recorded `distance` away.
///
/// Each spatial harmonic `n` of the grating launches a burst of
/// `n * n_periods` cycles at the frequency where `n / period` matches the
/// local wavenumber of the curve, delayed by `distance / v(f_n)`.
pub fn synthesize_slope_signal(
    mask: &MaskSpec,
    curve: &DispersionCurve,
    params: &SynthesisParams,
) -> Result<Waveform, SignalError> {
    mask.validate()?;
    if !(params.distance >= 0.0 && params.sample_rate > 0.0 && params.pulse_fwhm >= 0.0) {
        return Err(SignalError::InvalidInput(
            "distance, sample rate and pulse width must be non-negative".into(),
        ));
    }
    if !(params.noise_rms >= 0.0) {
        return Err(SignalError::InvalidInput(
            "noise RMS must be non-negative".into(),
        ));
    }
    if params.noise_rms > 0.0 && params.seed.is_none() {
        return Err(SignalError::MissingSeed);
    }
    let (_, f_hi) = curve
        .frequency_range()
        .ok_or_else(|| SignalError::InvalidInput("empty dispersion curve".into()))?;
    let f_max = params
        .max_frequency
        .unwrap_or(f_hi.min(0.45 * params.sample_rate));
    if f_max > f_hi * (1.0 + 1e-12) {
        return Err(SignalError::CoverageGap {
            harmonic: 0,
            lo: f_hi,
            hi: f_max,
        });
    }

    // (frequency, velocity, amplitude, cycles)
    let mut tones = Vec::new();
    for n in 1.. {
        let Some(f) = harmonic_frequency(curve, mask.period, n)? else {
            break;
        };
        if f > f_max {
            break;
        }
        let weight = mask.harmonic_weight(n);
        if weight == 0.0 {
            continue;
        }
        let v = f * mask.period / n as f64;
        let amp = weight * pulse_spectrum(f, params.pulse_fwhm);
        tones.push((f, v, amp, (n * mask.n_periods) as f64));
    }
    if tones.is_empty() {
        return Err(SignalError::InvalidInput(
            "no harmonic of the mask falls inside the curve".into(),
        ));
    }
    let f_top = tones.iter().map(|t| t.0).fold(0.0, f64::max);
    if 2.0 * f_top >= params.sample_rate {
        return Err(SignalError::InvalidInput(format!(
            "sample rate {} Hz does not resolve harmonic at {} Hz",
            params.sample_rate, f_top
        )));
    }

    let v_min = tones.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let train = mask.n_periods as f64 * mask.period / v_min;
    let duration = params
        .duration
        .unwrap_or(1.2 * (params.distance / v_min + train));
    let n_samples = (duration * params.sample_rate).ceil() as usize;
    let dt = 1.0 / params.sample_rate;

    let mut samples = vec![0.0; n_samples];
    for &(f, v, amp, cycles) in &tones {
        let start = params.distance / v;
        let stop = start + cycles / f;
        let i0 = (start * params.sample_rate).ceil().max(0.0) as usize;
        let i1 = ((stop * params.sample_rate).floor() as usize).min(n_samples.saturating_sub(1));
        for (i, s) in samples.iter_mut().enumerate().take(i1 + 1).skip(i0) {
            let t = i as f64 * dt;
            *s += amp * (2.0 * std::f64::consts::PI * f * (t - start)).sin();
        }
    }

    if params.noise_rms > 0.0 {
        let peak = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let sigma = params.noise_rms * peak;
        if sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.expect("checked above"));
            let normal = Normal::new(0.0, sigma).expect("finite sigma");
            for s in &mut samples {
                *s += normal.sample(&mut rng);
            }
        }
    }

    Ok(Waveform {
        samples,
        sample_rate: params.sample_rate,
        distance: params.distance,
        seed: params.seed,
        mask: Some(*mask),
    })
}
