use rustfft::{num_complex::Complex, FftPlanner};

use super::{SignalError, Waveform};

/// Smallest record accepted by [`spectrum`].
pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    None,
    #[default]
    Hann,
}

impl std::str::FromStr for Window {
    type Err = SignalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "rect" | "rectangular" => Ok(Window::None),
            "hann" | "hanning" => Ok(Window::Hann),
            other => Err(SignalError::InvalidInput(format!(
                "unknown window `{other}`"
            ))),
        }
    }
}

/// One-sided amplitude spectrum. A sinusoid of amplitude `A` spanning the
/// whole record reads as `A` at its bin, for either window.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Bin spacing (Hz).
    pub spacing: f64,
    pub amplitudes: Vec<f64>,
    pub window: Window,
    /// Samples in the record before padding.
    pub n_samples: usize,
    /// FFT length after zero padding.
    pub fft_len: usize,
    pub(crate) coherent_gain: f64,
}

impl Spectrum {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.spacing
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn bins(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, &a)| (self.frequency(i), a))
    }

    pub fn nyquist(&self) -> f64 {
        self.frequency(self.fft_len / 2)
    }

    /// Bin nearest to `f`, clamped to the spectrum.
    pub fn bin_of(&self, f: f64) -> usize {
        ((f / self.spacing).round().max(0.0) as usize).min(self.len() - 1)
    }

    fn raw_magnitude(&self, bin: usize) -> f64 {
        let edge = bin == 0 || (self.fft_len.is_multiple_of(2) && bin == self.fft_len / 2);
        let scale = if edge { 1.0 } else { 0.5 };
        self.amplitudes[bin] * self.n_samples as f64 * self.coherent_gain * scale
    }

    /// Sum of `|x_i w_i|^2` recovered from the spectrum by Parseval's theorem.
    pub fn parseval_energy(&self) -> f64 {
        let mut sum = 0.0;
        for bin in 0..self.len() {
            let m = self.raw_magnitude(bin);
            let edge = bin == 0 || (self.fft_len.is_multiple_of(2) && bin == self.fft_len / 2);
            sum += if edge { m * m } else { 2.0 * m * m };
        }
        sum / self.fft_len as f64
    }
}

fn window_weights(window: Window, n: usize) -> Vec<f64> {
    match window {
        Window::None => vec![1.0; n],
        Window::Hann => (0..n)
            .map(|i| {
                let x = std::f64::consts::PI * i as f64 / (n - 1) as f64;
                x.sin().powi(2)
            })
            .collect(),
    }
}

/// Amplitude spectrum of the waveform with optional windowing and zero
/// padding to `zero_pad_factor` times the record length.
pub fn spectrum(
    waveform: &Waveform,
    window: Window,
    zero_pad_factor: usize,
) -> Result<Spectrum, SignalError> {
    let n = waveform.samples.len();
    if n < MIN_SAMPLES {
        return Err(SignalError::InvalidInput(format!(
            "waveform has {n} samples, at least {MIN_SAMPLES} needed"
        )));
    }
    if zero_pad_factor == 0 {
        return Err(SignalError::InvalidInput(
            "zero-pad factor must be at least 1".into(),
        ));
    }
    if !(waveform.sample_rate > 0.0) {
        return Err(SignalError::InvalidInput(
            "sample rate must be positive".into(),
        ));
    }
    let w = window_weights(window, n);
    let coherent_gain = w.iter().sum::<f64>() / n as f64;
    let fft_len = n * zero_pad_factor;
    let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
    for (b, (x, wi)) in buf.iter_mut().zip(waveform.samples.iter().zip(&w)) {
        b.re = x * wi;
    }
    FftPlanner::new()
        .plan_fft_forward(fft_len)
        .process(&mut buf);

    let half = fft_len / 2;
    let norm = n as f64 * coherent_gain;
    let amplitudes = (0..=half)
        .map(|k| {
            let edge = k == 0 || (fft_len.is_multiple_of(2) && k == half);
            let s = if edge { 1.0 } else { 2.0 };
            s * buf[k].norm() / norm
        })
        .collect();
    Ok(Spectrum {
        spacing: waveform.sample_rate / fft_len as f64,
        amplitudes,
        window,
        n_samples: n,
        fft_len,
        coherent_gain,
    })
}
