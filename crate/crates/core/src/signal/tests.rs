use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;
use crate::dispersion::CurvePoint;
use crate::DispersionCurve;

fn flat_curve(v: f64, f_lo: f64, f_hi: f64) -> DispersionCurve {
    let pts = (0..=50)
        .map(|i| CurvePoint {
            frequency: f_lo + (f_hi - f_lo) * i as f64 / 50.0,
            velocity: v,
            sigma: None,
        })
        .collect();
    DispersionCurve::new(pts).unwrap()
}

fn sloped_curve() -> DispersionCurve {
    // v(f) = 5000 - 2e-6 f (m/s, f in Hz)
    let pts = (0..=100)
        .map(|i| {
            let f = 10e6 + 990e6 * i as f64 / 100.0;
            CurvePoint {
                frequency: f,
                velocity: 5000.0 - 2e-6 * f,
                sigma: None,
            }
        })
        .collect();
    DispersionCurve::new(pts).unwrap()
}

fn wave(samples: Vec<f64>, rate: f64) -> Waveform {
    Waveform {
        samples,
        sample_rate: rate,
        distance: 0.0,
        seed: None,
        mask: None,
    }
}

fn glass(period: f64, duty: f64) -> MaskSpec {
    MaskSpec::new(period, duty, 400, MaskKind::GlassMask).unwrap()
}

#[test]
fn spectrum_matches_direct_dft() {
    let n = 32;
    let x: Vec<f64> = (0..n)
        .map(|i| ((i * 7 % 11) as f64 - 5.0) * 0.3 + (i as f64 * 0.4).sin())
        .collect();
    let s = spectrum(&wave(x.clone(), 32.0), Window::None, 1).unwrap();
    assert_eq!(s.len(), 17);
    assert_relative_eq!(s.spacing, 1.0);
    for k in 0..=16 {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, xi) in x.iter().enumerate() {
            let ph = -2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64;
            re += xi * ph.cos();
            im += xi * ph.sin();
        }
        let scale = if k == 0 || k == 16 { 1.0 } else { 2.0 };
        let expect = scale * (re * re + im * im).sqrt() / n as f64;
        assert!((s.amplitudes[k] - expect).abs() < 1e-12, "bin {k}");
    }
}

#[test]
fn sinusoid_amplitude_reads_true_for_both_windows() {
    let n = 1024;
    let rate = 1024.0;
    let x: Vec<f64> = (0..n)
        .map(|i| 0.7 * (2.0 * std::f64::consts::PI * 100.0 * i as f64 / rate).sin())
        .collect();
    for win in [Window::None, Window::Hann] {
        let s = spectrum(&wave(x.clone(), rate), win, 1).unwrap();
        assert_relative_eq!(s.amplitudes[100], 0.7, max_relative = 2e-3);
    }
}

#[test]
fn zero_padding_refines_spacing() {
    let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.3).cos()).collect();
    let s = spectrum(&wave(x, 1e6), Window::Hann, 4).unwrap();
    assert_eq!(s.fft_len, 400);
    assert_relative_eq!(s.spacing, 2500.0);
}

#[test]
fn spectrum_rejects_short_records() {
    assert!(spectrum(&wave(vec![0.0; 8], 1.0), Window::None, 1).is_err());
    assert!(spectrum(&wave(vec![0.0; 64], 1.0), Window::None, 0).is_err());
}

#[test]
fn harmonic_weights_follow_square_grating() {
    let m = glass(24e-6, 0.5);
    assert_relative_eq!(m.harmonic_weight(1), 2.0 / std::f64::consts::PI);
    assert_eq!(m.harmonic_weight(2), 0.0);
    assert_eq!(m.harmonic_weight(4), 0.0);
    assert_relative_eq!(
        m.harmonic_weight(3),
        -2.0 / std::f64::consts::PI,
        max_relative = 1e-12
    );
    let q = glass(24e-6, 0.25);
    assert_relative_eq!(q.harmonic_weight(2), 2.0 / std::f64::consts::PI);
    assert_eq!(q.harmonic_weight(4), 0.0);
}

#[test]
fn harmonic_frequency_is_self_consistent() {
    let curve = sloped_curve();
    for n in 1..=5 {
        let f = harmonic_frequency(&curve, 48e-6, n).unwrap().unwrap();
        let v = curve.interpolate(f).unwrap();
        assert_relative_eq!(f, n as f64 * v / 48e-6, max_relative = 1e-10);
    }
    assert!(harmonic_frequency(&curve, 48e-6, 20).unwrap().is_none());
}

#[test]
fn coverage_gap_is_reported() {
    let curve = flat_curve(5000.0, 300e6, 900e6);
    let err = synthesize_slope_signal(&glass(48e-6, 0.5), &curve, &SynthesisParams::default())
        .unwrap_err();
    match err {
        SignalError::CoverageGap { lo, hi, .. } => {
            assert!(lo < hi);
            assert_relative_eq!(hi, 300e6);
        }
        other => panic!("unexpected {other:?}"),
    }
    let params = SynthesisParams {
        max_frequency: Some(950e6),
        ..Default::default()
    };
    let curve = flat_curve(5000.0, 50e6, 900e6);
    assert!(matches!(
        synthesize_slope_signal(&glass(48e-6, 0.5), &curve, &params),
        Err(SignalError::CoverageGap { .. })
    ));
}

#[test]
fn synthesis_requires_adequate_sampling_and_seed() {
    let curve = flat_curve(5000.0, 50e6, 900e6);
    let slow = SynthesisParams {
        sample_rate: 1e9,
        max_frequency: Some(800e6),
        ..Default::default()
    };
    assert!(synthesize_slope_signal(&glass(24e-6, 0.5), &curve, &slow).is_err());
    let noisy = SynthesisParams {
        noise_rms: 0.01,
        ..Default::default()
    };
    assert_eq!(
        synthesize_slope_signal(&glass(24e-6, 0.5), &curve, &noisy),
        Err(SignalError::MissingSeed)
    );
}

#[test]
fn seeded_synthesis_is_deterministic() {
    let curve = sloped_curve();
    let params = SynthesisParams {
        noise_rms: 0.01,
        seed: Some(7),
        ..Default::default()
    };
    let a = synthesize_slope_signal(&glass(48e-6, 0.5), &curve, &params).unwrap();
    let b = synthesize_slope_signal(&glass(48e-6, 0.5), &curve, &params).unwrap();
    assert_eq!(a.samples, b.samples);
    let c = synthesize_slope_signal(
        &glass(48e-6, 0.5),
        &curve,
        &SynthesisParams {
            seed: Some(8),
            ..params.clone()
        },
    )
    .unwrap();
    assert_ne!(a.samples, c.samples);
}

#[test]
fn flat_curve_gives_flat_vph() {
    let curve = flat_curve(5000.0, 50e6, 900e6);
    let mask = glass(48e-6, 0.3);
    let w = synthesize_slope_signal(&mask, &curve, &SynthesisParams::default()).unwrap();
    let s = spectrum(&w, Window::Hann, 4).unwrap();
    let hint = estimate_fundamental(&s).unwrap();
    assert_relative_eq!(hint, 5000.0 / 48e-6, max_relative = 0.02);
    let report = pick_harmonic_peaks(&s, hint, 6, 0.02).unwrap();
    assert!(report.peaks.len() >= 4, "{report:?}");
    let pts = vph_points(&report.peaks, mask.period).unwrap();
    for p in pts.points() {
        assert_relative_eq!(p.velocity, 5000.0, max_relative = 1e-3);
        assert!(p.sigma.unwrap() > 0.0);
    }
}

#[test]
fn sloped_curve_is_recovered() {
    let curve = sloped_curve();
    let mask = glass(24e-6, 0.3);
    let params = SynthesisParams {
        noise_rms: 0.01,
        seed: Some(1),
        ..Default::default()
    };
    let w = synthesize_slope_signal(&mask, &curve, &params).unwrap();
    let s = spectrum(&w, Window::Hann, 4).unwrap();
    let report = pick_harmonic_peaks(&s, estimate_fundamental(&s).unwrap(), 4, 0.02).unwrap();
    let pts = vph_points(&report.peaks, mask.period).unwrap();
    assert!(pts.len() >= 2);
    for p in pts.points() {
        let truth = curve.interpolate(p.frequency).unwrap();
        assert!(
            (p.velocity - truth).abs() < 0.002 * truth,
            "{} vs {}",
            p.velocity,
            truth
        );
    }
}

#[test]
fn strong_dispersion_keeps_harmonic_order() {
    // 20% velocity drop between the fundamental and the third harmonic.
    let pts = (0..=100)
        .map(|i| {
            let f = 20e6 + 680e6 * i as f64 / 100.0;
            CurvePoint {
                frequency: f,
                velocity: 4800.0 - 2.2e-6 * (f - 20e6),
                sigma: None,
            }
        })
        .collect();
    let curve = DispersionCurve::new(pts).unwrap();
    let mask = glass(24e-6, 0.5);
    let params = SynthesisParams {
        noise_rms: 0.01,
        seed: Some(2),
        max_frequency: Some(690e6),
        ..Default::default()
    };
    let w = synthesize_slope_signal(&mask, &curve, &params).unwrap();
    let s = spectrum(&w, Window::Hann, 4).unwrap();
    let hint = estimate_fundamental(&s).unwrap();
    let report = pick_mask_harmonics(&s, hint, 6, 0.02, &mask).unwrap();
    let orders: Vec<usize> = report.peaks.iter().map(|p| p.harmonic).collect();
    assert_eq!(orders, vec![1, 3]);
    for p in vph_points(&report.peaks, mask.period).unwrap().points() {
        let truth = curve.interpolate(p.frequency).unwrap();
        assert!(
            (p.velocity - truth).abs() < 0.002 * truth,
            "{} vs {truth}",
            p.velocity
        );
    }
}

#[test]
fn even_harmonics_absent_for_half_duty() {
    let curve = flat_curve(5000.0, 50e6, 900e6);
    let w =
        synthesize_slope_signal(&glass(48e-6, 0.5), &curve, &SynthesisParams::default()).unwrap();
    let s = spectrum(&w, Window::Hann, 4).unwrap();
    let report = pick_harmonic_peaks(&s, 5000.0 / 48e-6, 4, 0.02).unwrap();
    let found: Vec<usize> = report.peaks.iter().map(|p| p.harmonic).collect();
    assert!(found.contains(&1) && found.contains(&3));
    assert!(!found.contains(&2) && !found.contains(&4), "{found:?}");
}

#[test]
fn pure_noise_has_no_fundamental() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let x: Vec<f64> = (0..8192).map(|_| normal.sample(&mut rng)).collect();
    let s = spectrum(&wave(x, 2e9), Window::Hann, 4).unwrap();
    assert!(matches!(
        pick_harmonic_peaks(&s, 100e6, 3, 0.05),
        Err(SignalError::NoFundamental { .. })
    ));
    assert!(estimate_fundamental(&s).is_err());
}

#[test]
fn peak_picking_rejects_bad_arguments() {
    let s = spectrum(&wave(vec![1.0; 64], 1.0), Window::None, 1).unwrap();
    assert!(pick_harmonic_peaks(&s, 0.0, 3, 0.05).is_err());
    assert!(pick_harmonic_peaks(&s, 0.1, 0, 0.05).is_err());
}

#[test]
fn minus_3db_width_of_sampled_gaussian() {
    // exp(-x^2/2) drops to 1/sqrt(2) at x = sqrt(ln 2)
    let amps: Vec<f64> = (0..201)
        .map(|i| (-((i as f64 - 100.0) / 10.0).powi(2) / 2.0).exp())
        .collect();
    let s = Spectrum {
        spacing: 1.0,
        amplitudes: amps,
        window: Window::None,
        n_samples: 400,
        fft_len: 400,
        coherent_gain: 1.0,
    };
    let expect = 2.0 * 10.0 * std::f64::consts::LN_2.sqrt();
    assert_relative_eq!(minus_3db_width(&s, 100, 1.0), expect, max_relative = 2e-3);
}

#[test]
fn slm_wavelength_example() {
    let slm = SlmSpec {
        pixel_pitch: 32e-6,
        period_pixels: 10,
        projection_ratio: 9.1,
        ratio_sigma: 0.23,
    };
    assert!((slm_wavelength(&slm).unwrap() - 35.16e-6).abs() < 0.005e-6);
    let unit = SlmSpec {
        projection_ratio: 1.0,
        ..slm
    };
    assert_relative_eq!(slm_wavelength(&unit).unwrap(), 320e-6);
    for bad in [0, 1] {
        assert!(slm_wavelength(&SlmSpec {
            period_pixels: bad,
            ..slm
        })
        .is_err());
    }
    assert_eq!(slm.mask(0.5, 50).unwrap().kind, MaskKind::Slm);
}

#[test]
fn calibration_recovers_ratio() {
    let (pitch, r, v) = (8e-6, 9.1, 5080.0);
    let meas: Vec<(u32, f64)> = [8u32, 12, 16, 24]
        .iter()
        .map(|&p| (p, v * r / (pitch * p as f64)))
        .collect();
    let cal = calibrate_projection_ratio(&meas, pitch, v).unwrap();
    assert_relative_eq!(cal.ratio, r, max_relative = 1e-12);
    assert!(cal.sigma.unwrap() < 1e-12);
    let one = calibrate_projection_ratio(&meas[..1], pitch, v).unwrap();
    assert!(one.sigma.is_none());
    assert!(calibrate_projection_ratio(&[], pitch, v).is_err());
    assert!(calibrate_projection_ratio(&[(0, 1e8)], pitch, v).is_err());
}

#[test]
fn calibration_sigma_is_standard_error() {
    let meas = [(10u32, 1.0), (10, 2.0), (10, 3.0)];
    let cal = calibrate_projection_ratio(&meas, 1.0, 1.0).unwrap();
    assert_relative_eq!(cal.ratio, 20.0);
    assert_relative_eq!(cal.sigma.unwrap(), 10.0 / 3f64.sqrt());
}

#[test]
fn waveform_csv_round_trip() {
    let curve = sloped_curve();
    let params = SynthesisParams {
        noise_rms: 0.01,
        seed: Some(11),
        duration: Some(200e-9),
        ..Default::default()
    };
    let w = synthesize_slope_signal(&glass(48e-6, 0.5), &curve, &params).unwrap();
    let text = write_waveform_csv(&w);
    let back = read_waveform_csv(&text).unwrap();
    assert_eq!(back.sample_rate, w.sample_rate);
    assert_eq!(back.distance, w.distance);
    assert_eq!(back.seed, Some(11));
    assert_eq!(back.mask, w.mask);
    assert_eq!(back.samples.len(), w.samples.len());
    for (a, b) in back.samples.iter().zip(&w.samples) {
        assert_eq!(a, b);
    }
}

#[test]
fn waveform_csv_errors_carry_line_numbers() {
    let text = "# sample_rate_hz=1e9\n# distance_m=0.005\ntime_s,amplitude\n0,1\n1e-9,abc\n";
    assert_eq!(
        read_waveform_csv(text).unwrap_err(),
        SignalError::Csv {
            line: 5,
            reason: "not a number: `abc`".into()
        }
    );
    assert!(read_waveform_csv("time_s,amplitude\n0,1\n").is_err());
    assert!(read_waveform_csv("# sample_rate_hz=1e9\n# distance_m=0\nfoo,bar\n").is_err());
}

#[test]
fn spectrum_csv_has_header_and_rows() {
    let s = spectrum(&wave(vec![1.0; 32], 32.0), Window::None, 1).unwrap();
    let text = spectrum_csv(&s);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("frequency_hz,amplitude"));
    assert_eq!(lines.count(), 17);
}

proptest! {
    #[test]
    fn parseval_holds(x in prop::collection::vec(-10.0f64..10.0, 16..300)) {
        let s = spectrum(&wave(x.clone(), 1.0), Window::None, 1).unwrap();
        let direct: f64 = x.iter().map(|v| v * v).sum();
        prop_assert!((s.parseval_energy() - direct).abs() <= 1e-9 * direct.max(1.0));
    }

    #[test]
    fn vph_is_frequency_times_wavelength(f in 1e7f64..1e9, n in 1usize..8, d in 1e-6f64..1e-4) {
        let peak = HarmonicPeak { harmonic: n, frequency: f, amplitude: 1.0, sigma_f: 1e5 };
        let c = vph_points(&[peak], d).unwrap();
        let p = c.points()[0];
        prop_assert!((p.velocity - f * d / n as f64).abs() <= 1e-12 * p.velocity);
        prop_assert!((p.sigma.unwrap() - 1e5 * d / n as f64).abs() <= 1e-12 * p.sigma.unwrap());
    }

    #[test]
    fn slm_wavelength_scales_inversely(r in 1.0f64..20.0, p in 2u32..64) {
        let a = slm_wavelength(&SlmSpec { pixel_pitch: 8e-6, period_pixels: p, projection_ratio: r, ratio_sigma: 0.0 }).unwrap();
        let b = slm_wavelength(&SlmSpec { pixel_pitch: 8e-6, period_pixels: p, projection_ratio: 2.0 * r, ratio_sigma: 0.0 }).unwrap();
        prop_assert!((a / b - 2.0).abs() < 1e-12);
    }
}
