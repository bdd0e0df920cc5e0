use super::{MaskSpec, SignalError, Spectrum};
use crate::dispersion::CurvePoint;
use crate::DispersionCurve;

/// Fundamental must stand this far above the median spectral level.
pub const FUNDAMENTAL_SNR: f64 = 10.0;
/// Search half-width relative to the predicted harmonic frequency.
const WINDOW_FRACTION: f64 = 0.2;
/// Cap on the half-width relative to the harmonic spacing, so that
/// neighbouring windows never overlap.
const SPACING_FRACTION: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicPeak {
    pub harmonic: usize,
    /// Hz
    pub frequency: f64,
    pub amplitude: f64,
    /// Half of the -3 dB full width (Hz).
    pub sigma_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Omission {
    /// Search window extends past the Nyquist frequency.
    OutOfBand,
    /// No interior local maximum in the window.
    NoPeak,
    /// Peak amplitude relative to the fundamental below the threshold.
    BelowProminence { relative_amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakReport {
    pub peaks: Vec<HarmonicPeak>,
    pub omitted: Vec<(usize, Omission)>,
}

fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        0.0
    } else {
        v[v.len() / 2]
    }
}

/// Full width at which the amplitude falls to `1/sqrt(2)` of the value at
/// `bin`, linearly interpolated between bins.
pub fn minus_3db_width(spectrum: &Spectrum, bin: usize, peak_amplitude: f64) -> f64 {
    let a = &spectrum.amplitudes;
    let level = peak_amplitude / std::f64::consts::SQRT_2;
    let mut left = 0.0;
    let mut i = bin;
    while i > 0 {
        if a[i - 1] < level {
            let t = (a[i] - level) / (a[i] - a[i - 1]);
            left = (i as f64 - t.clamp(0.0, 1.0)) * spectrum.spacing;
            break;
        }
        i -= 1;
    }
    let mut right = spectrum.frequency(a.len() - 1);
    let mut j = bin;
    while j + 1 < a.len() {
        if a[j + 1] < level {
            let t = (a[j] - level) / (a[j] - a[j + 1]);
            right = (j as f64 + t.clamp(0.0, 1.0)) * spectrum.spacing;
            break;
        }
        j += 1;
    }
    right - left
}

/// Interior maximum of `a[lo..=hi]`, if the largest value is not on an edge.
fn interior_max(a: &[f64], lo: usize, hi: usize) -> Option<usize> {
    let mut best = lo;
    for i in lo..=hi {
        if a[i] > a[best] {
            best = i;
        }
    }
    (best > lo && best < hi).then_some(best)
}

fn refine(spectrum: &Spectrum, bin: usize) -> (f64, f64) {
    let a = &spectrum.amplitudes;
    let tiny = f64::MIN_POSITIVE;
    let (l, c, r) = (
        a[bin - 1].max(tiny).ln(),
        a[bin].max(tiny).ln(),
        a[bin + 1].max(tiny).ln(),
    );
    let denom = l - 2.0 * c + r;
    let delta = if denom < 0.0 {
        (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let amp = (c - 0.25 * (l - r) * delta).exp();
    ((bin as f64 + delta) * spectrum.spacing, amp)
}

/// Rough fundamental: the strongest peak, or the lowest subharmonic of it
/// that carries a clear peak of its own.
pub fn estimate_fundamental(spectrum: &Spectrum) -> Result<f64, SignalError> {
    let a = &spectrum.amplitudes;
    let floor = median(&a[1..]);
    let start = (a.len() / 200).max(2);
    let mut top = start;
    for i in start..a.len() - 1 {
        if a[i] > a[top] {
            top = i;
        }
    }
    let f_top = spectrum.frequency(top);
    if !(a[top] > FUNDAMENTAL_SNR * floor) {
        return Err(SignalError::NoFundamental { hint: f_top });
    }
    let mut best = f_top;
    for m in 2..=6 {
        let f = f_top / m as f64;
        let lo = spectrum.bin_of(f * 0.9).max(1);
        let hi = spectrum.bin_of(f * 1.1);
        if hi <= lo + 1 {
            break;
        }
        if let Some(i) = interior_max(a, lo, hi) {
            if a[i] >= 0.1 * a[top] && a[i] > FUNDAMENTAL_SNR * floor {
                best = spectrum.frequency(i);
            }
        }
    }
    Ok(best)
}

/// Per-harmonic spacing `f/n` (velocity over period) expected at frequency
/// `f`. With two accepted peaks it is extrapolated linearly in frequency, so
/// dispersion does not shift the assignment onto a neighbouring harmonic.
fn spacing_at(accepted: &[(usize, f64)], f: f64) -> f64 {
    match accepted {
        [] => unreachable!("fundamental is accepted first"),
        [(m, f1)] => f1 / *m as f64,
        [.., (m0, f0), (m1, f1)] => {
            let (u0, u1) = (f0 / *m0 as f64, f1 / *m1 as f64);
            let u = u1 + (u1 - u0) / (f1 - f0) * (f - f1);
            u.clamp(0.5 * u1, 1.5 * u1)
        }
    }
}

/// Frequency of harmonic `n` consistent with [`spacing_at`].
fn predict(accepted: &[(usize, f64)], n: usize) -> f64 {
    let (m, f_last) = accepted[accepted.len() - 1];
    let mut f = f_last / m as f64 * n as f64;
    for _ in 0..50 {
        f = n as f64 * spacing_at(accepted, f);
    }
    f
}

/// Local maxima above `threshold`, thinned so that no two lie closer than
/// `separation` Hz (the stronger survives). Returned in ascending bin order.
fn candidate_peaks(
    spectrum: &Spectrum,
    from: usize,
    threshold: f64,
    separation: f64,
) -> Vec<usize> {
    let a = &spectrum.amplitudes;
    let mut maxima: Vec<usize> = (from.max(1)..a.len() - 1)
        .filter(|&i| a[i] > threshold && a[i] > a[i - 1] && a[i] >= a[i + 1])
        .collect();
    maxima.sort_by(|&i, &j| a[j].total_cmp(&a[i]));
    let mut kept: Vec<usize> = Vec::new();
    for i in maxima {
        if kept
            .iter()
            .all(|&k| (spectrum.frequency(k) - spectrum.frequency(i)).abs() >= separation)
        {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Locates the first `n_harmonics` harmonic peaks of a fundamental near
/// `fundamental_hint`.
///
/// The fundamental is the largest interior maximum within 20% of the hint.
/// Every other peak above `min_prominence` (relative to the fundamental) is
/// assigned the harmonic order whose spacing best matches the spacing
/// extrapolated from the peaks already accepted, walking upward in frequency.
/// Harmonics left without a peak are reported in `omitted`.
pub fn pick_harmonic_peaks(
    spectrum: &Spectrum,
    fundamental_hint: f64,
    n_harmonics: usize,
    min_prominence: f64,
) -> Result<PeakReport, SignalError> {
    pick(
        spectrum,
        fundamental_hint,
        n_harmonics,
        min_prominence,
        |_| true,
    )
}

/// As [`pick_harmonic_peaks`], but orders the mask grating cannot excite
/// (zero Fourier weight, e.g. even orders at duty 0.5) are never assigned.
/// This removes the order ambiguity of strongly dispersive curves.
pub fn pick_mask_harmonics(
    spectrum: &Spectrum,
    fundamental_hint: f64,
    n_harmonics: usize,
    min_prominence: f64,
    mask: &MaskSpec,
) -> Result<PeakReport, SignalError> {
    mask.validate()?;
    pick(
        spectrum,
        fundamental_hint,
        n_harmonics,
        min_prominence,
        |n| mask.harmonic_weight(n) != 0.0,
    )
}

fn pick(
    spectrum: &Spectrum,
    fundamental_hint: f64,
    n_harmonics: usize,
    min_prominence: f64,
    allowed: impl Fn(usize) -> bool,
) -> Result<PeakReport, SignalError> {
    if !(fundamental_hint > 0.0 && fundamental_hint.is_finite()) {
        return Err(SignalError::InvalidInput(
            "fundamental hint must be positive".into(),
        ));
    }
    if n_harmonics == 0 {
        return Err(SignalError::InvalidInput(
            "at least one harmonic must be requested".into(),
        ));
    }
    if spectrum.len() < 4 {
        return Err(SignalError::InvalidInput("spectrum too short".into()));
    }
    let a = &spectrum.amplitudes;
    let floor = median(&a[1..]);
    let no_fundamental = SignalError::NoFundamental {
        hint: fundamental_hint,
    };

    let half = WINDOW_FRACTION * fundamental_hint;
    if fundamental_hint + half >= spectrum.nyquist() {
        return Err(no_fundamental);
    }
    let lo = spectrum.bin_of(fundamental_hint - half).max(1);
    let hi = spectrum.bin_of(fundamental_hint + half);
    let bin = (hi > lo + 1)
        .then(|| interior_max(a, lo, hi))
        .flatten()
        .ok_or(no_fundamental.clone())?;
    if !(a[bin] > FUNDAMENTAL_SNR * floor) {
        return Err(no_fundamental);
    }
    let peak_at = |bin: usize, harmonic: usize| {
        let (frequency, amplitude) = refine(spectrum, bin);
        HarmonicPeak {
            harmonic,
            frequency,
            amplitude,
            sigma_f: 0.5 * minus_3db_width(spectrum, bin, a[bin]),
        }
    };
    let fundamental = peak_at(bin, 1);
    let f1 = fundamental.frequency;
    let a1 = fundamental.amplitude;
    let mut peaks = vec![fundamental];
    let mut accepted = vec![(1usize, f1)];

    if n_harmonics > 1 {
        let from = spectrum.bin_of(f1 * (1.0 + SPACING_FRACTION)) + 1;
        for i in candidate_peaks(spectrum, from, min_prominence * a1, SPACING_FRACTION * f1) {
            let peak = peak_at(i, 0);
            if peak.amplitude < min_prominence * a1 {
                continue;
            }
            // Order with the smallest relative spacing mismatch.
            let ratio = peak.frequency / spacing_at(&accepted, peak.frequency);
            let last = accepted[accepted.len() - 1].0;
            let mismatch = |n: usize| (ratio / n as f64 - 1.0).abs();
            let Some(n) = (last + 1..=ratio.ceil() as usize + 1)
                .filter(|&n| allowed(n))
                .min_by(|&i, &j| mismatch(i).total_cmp(&mismatch(j)))
            else {
                continue;
            };
            if n > n_harmonics {
                break;
            }
            peaks.push(HarmonicPeak {
                harmonic: n,
                ..peak
            });
            accepted.push((n, peak.frequency));
        }
    }

    let mut omitted = Vec::new();
    for n in 2..=n_harmonics {
        if peaks.iter().any(|p| p.harmonic == n) {
            continue;
        }
        let known: Vec<(usize, f64)> = accepted.iter().copied().filter(|&(m, _)| m < n).collect();
        let center = predict(&known, n);
        let spacing = center / n as f64;
        let half = (WINDOW_FRACTION * center).min(SPACING_FRACTION * spacing);
        if center + half >= spectrum.nyquist() {
            omitted.push((n, Omission::OutOfBand));
            continue;
        }
        let lo = spectrum.bin_of(center - half).max(1);
        let hi = spectrum.bin_of(center + half);
        let reason = match (hi > lo + 1).then(|| interior_max(a, lo, hi)).flatten() {
            Some(i) => {
                let rel = refine(spectrum, i).1 / a1;
                if rel < min_prominence {
                    Omission::BelowProminence {
                        relative_amplitude: rel,
                    }
                } else {
                    Omission::NoPeak
                }
            }
            None => Omission::NoPeak,
        };
        omitted.push((n, reason));
    }
    Ok(PeakReport { peaks, omitted })
}

/// Phase-velocity points `v = f * period / n` with propagated uncertainty.
pub fn vph_points(peaks: &[HarmonicPeak], period: f64) -> Result<DispersionCurve, SignalError> {
    if !(period > 0.0) {
        return Err(SignalError::InvalidInput(
            "mask period must be positive".into(),
        ));
    }
    let points = peaks
        .iter()
        .map(|p| {
            let wl = period / p.harmonic as f64;
            CurvePoint {
                frequency: p.frequency,
                velocity: p.frequency * wl,
                sigma: Some(p.sigma_f * wl),
            }
        })
        .collect();
    DispersionCurve::from_unsorted(points).map_err(|e| SignalError::InvalidInput(e.to_string()))
}
