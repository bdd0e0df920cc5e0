use std::f64::consts::PI;

use approx::assert_relative_eq;

use super::*;
use crate::materials::{CubicMaterial, IsotropicMaterial, Layer, LayerStack, Propagation};

fn silicon() -> CubicMaterial<f64> {
    CubicMaterial::new(165.7e9, 63.9e9, 79.6e9, 2330.0).unwrap()
}

fn oxide() -> IsotropicMaterial<f64> {
    IsotropicMaterial::new(69.8e9, 0.15, 2200.0).unwrap()
}

fn sige(c_ge: f64) -> IsotropicMaterial<f64> {
    let e = 160e9 - c_ge * (160e9 - 132e9);
    let rho = 2330.0 + c_ge * (5320.0 - 2330.0);
    IsotropicMaterial::new(e, 0.22, rho).unwrap()
}

fn stack_1a() -> LayerStack<f64> {
    LayerStack::new(
        vec![
            Layer::new(sige(0.18), 1.0e-6).unwrap(),
            Layer::new(oxide(), 2.435e-6).unwrap(),
        ],
        silicon(),
        Propagation::cubic_001_110(),
    )
    .unwrap()
}

fn iso(nu: f64) -> IsotropicMaterial<f64> {
    IsotropicMaterial::new(100e9, nu, 3000.0).unwrap()
}

/// Root of the cubic `x^3 - 8x^2 + (24 - 16 kappa) x - 16 (1 - kappa)` in
/// (0, 1), by dense sampling and bisection.
fn rayleigh_ratio_from_cubic(nu: f64) -> f64 {
    let kappa = (1.0 - 2.0 * nu) / (2.0 * (1.0 - nu));
    let f = |x: f64| x * x * x - 8.0 * x * x + (24.0 - 16.0 * kappa) * x - 16.0 * (1.0 - kappa);
    let n = 10_000;
    for i in 0..n {
        let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
        if f(a) * f(b) <= 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(lo) * f(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return (0.5 * (lo + hi)).sqrt();
        }
    }
    panic!("no root in (0, 1)")
}

#[test]
fn cubic_oracle_values() {
    assert!((rayleigh_ratio_from_cubic(0.25) - 0.91940).abs() < 1e-5);
    assert!((rayleigh_ratio_from_cubic(0.0) - 0.87404).abs() < 1e-5);
}

#[test]
fn analytic_rayleigh_matches_cubic_oracle() {
    for nu in [-0.5, 0.0, 0.1, 0.25, 0.34, 0.45, 0.49] {
        let m = iso(nu);
        let ratio = rayleigh_velocity_isotropic(&m) / m.shear_velocity();
        assert!(
            (ratio - rayleigh_ratio_from_cubic(nu)).abs() < 1e-12,
            "nu = {nu}"
        );
        assert!(rayleigh_velocity_isotropic(&m) < m.shear_velocity());
        assert!(m.shear_velocity() < m.longitudinal_velocity());
    }
}

#[test]
fn isotropic_partial_waves_match_closed_form() {
    let m = iso(0.25);
    let c = crate::materials::stiffness_from_isotropic(&m).unwrap();
    let vt = m.shear_velocity();
    let vl = m.longitudinal_velocity();
    let v = 0.8 * vt;
    let k = 2.0 * PI * 1e8 / v;
    let set = partial_waves(&c, m.density, k * v, k).unwrap();
    assert_eq!(set.waves.len(), 6);
    let pt = (1.0 - v * v / (vt * vt)).sqrt();
    let pl = (1.0 - v * v / (vl * vl)).sqrt();
    let mut im: Vec<f64> = set.waves.iter().map(|w| w.eigenvalue.im).collect();
    im.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let expected = [-pt, -pt, -pl, pl, pt, pt];
    let mut expected = expected.to_vec();
    expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (got, want) in im.iter().zip(&expected) {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
    for w in &set.waves {
        assert!(w.eigenvalue.re.abs() < 1e-10);
        assert_ne!(w.eigenvalue.im, 0.0);
    }
    assert_eq!(set.count(WaveKind::Decaying), 3);
    assert_eq!(set.count(WaveKind::Growing), 3);
    for i in 0..6 {
        assert!(set.residual(i) < 1e-10, "residual {}", set.residual(i));
    }
    // Ordering by imaginary part, then real part.
    for pair in set.waves.windows(2) {
        assert!(pair[0].eigenvalue.im <= pair[1].eigenvalue.im + 1e-12);
    }
}

#[test]
fn supersonic_waves_are_propagating() {
    let m = iso(0.25);
    let c = crate::materials::stiffness_from_isotropic(&m).unwrap();
    let v = 1.2 * m.shear_velocity();
    let set = partial_waves(&c, m.density, 1e9, 1e9 / v).unwrap();
    let propagating = set.count(WaveKind::PropagatingDown) + set.count(WaveKind::PropagatingUp);
    assert!(propagating >= 2);
    assert_eq!(
        set.count(WaveKind::PropagatingDown),
        set.count(WaveKind::PropagatingUp)
    );
}

#[test]
fn anisotropic_partial_wave_residuals() {
    silicon().validate().unwrap();
    let t = crate::materials::stiffness_from_cubic(&silicon())
        .unwrap()
        .rotated(&Propagation::<f64>::cubic_001_110().rotation());
    for v in [3000.0, 4500.0, 5000.0, 5500.0] {
        let set = partial_waves(&t, 2330.0, 2.0 * PI * 1e8, 2.0 * PI * 1e8 / v).unwrap();
        for i in 0..6 {
            assert!(set.residual(i) < 1e-10);
        }
    }
}

#[test]
fn partial_waves_reject_nonpositive_inputs() {
    let c = crate::materials::stiffness_from_isotropic(&iso(0.25)).unwrap();
    assert!(matches!(
        partial_waves(&c, 3000.0, 0.0, 1.0),
        Err(DispersionError::InvalidInput(_))
    ));
    assert!(matches!(
        partial_waves(&c, 3000.0, 1.0, -1.0),
        Err(DispersionError::InvalidInput(_))
    ));
}

#[test]
fn half_space_matrix_is_three_by_three_and_vanishes_at_rayleigh() {
    let m = iso(0.25);
    let stack = LayerStack::half_space(m, Propagation::default());
    let vr = rayleigh_velocity_isotropic(&m);
    let k = 1e6;
    let at = boundary_matrix(&stack, vr * k, k).unwrap();
    let off = boundary_matrix(&stack, 0.95 * vr * k, k).unwrap();
    assert_eq!(at.matrix.nrows(), 3);
    assert!(at.determinant.norm() < 1e-6 * off.determinant.norm());
    assert!(at.condition_number > 1e6 * off.condition_number);
}

#[test]
fn matrix_dimension_grows_with_layers() {
    let stack = stack_1a();
    let v = 4000.0;
    let f = 200e6;
    let k = 2.0 * PI * f / v;
    let b = boundary_matrix(&stack, 2.0 * PI * f, k).unwrap();
    assert_eq!(b.matrix.nrows(), 6 * 2 + 3);
    assert_eq!(b.matrix.ncols(), 6 * 2 + 3);
}

#[test]
fn stack_1a_scan_window_is_finite() {
    let stack = stack_1a();
    let (lo, hi) = search_window(&stack).unwrap();
    let f = 200e6;
    let mut v = lo;
    while v < hi {
        let b = boundary_matrix(&stack, 2.0 * PI * f, 2.0 * PI * f / v).unwrap();
        assert!(b.condition_number.is_finite(), "v = {v}");
        assert!(b.determinant.re.is_finite() && b.determinant.im.is_finite());
        assert!(b
            .matrix
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite()));
        v += 25.0;
    }
}

#[test]
fn green_function_is_scale_invariant_on_half_space() {
    let stack = LayerStack::half_space(silicon(), Propagation::default());
    for (omega, k) in [
        (2.0 * PI * 1e8, 2.0 * PI * 1e8 / 4500.0),
        (1e9, 1e9 / 3000.0),
    ] {
        let a = surface_green_g33(&stack, omega, k)
            .unwrap()
            .value()
            .unwrap();
        for c in [0.01, 3.0, 1e3] {
            let b = surface_green_g33(&stack, c * omega, c * k)
                .unwrap()
                .value()
                .unwrap();
            assert!((a - b).norm() <= 1e-12 * a.norm());
        }
    }
}

#[test]
fn green_function_has_pole_at_rayleigh_velocity() {
    let m = iso(0.3);
    let stack = LayerStack::half_space(m, Propagation::default());
    let vr = rayleigh_velocity_isotropic(&m);
    let g = |v: f64| {
        let k = 1e6;
        surface_green_g33(&stack, v * k, k)
            .unwrap()
            .value()
            .map(|z| z.norm())
            .unwrap_or(f64::INFINITY)
    };
    let far = g(0.8 * vr);
    let close = g(vr * (1.0 + 1e-7));
    assert!(close > 1e5 * far, "{close} vs {far}");
    // Real below threshold.
    let z = surface_green_g33(&stack, 0.9 * vr * 1e6, 1e6)
        .unwrap()
        .value()
        .unwrap();
    assert!(z.im.abs() < 1e-9 * z.re.abs());
}

#[test]
fn bare_silicon_anchor() {
    let stack = LayerStack::half_space(silicon(), Propagation::cubic_001_110());
    let v = saw_phase_velocity(&stack, 100e6).unwrap();
    assert!((v - 5080.0).abs() / 5080.0 < 5e-3, "v = {v}");
}

#[test]
fn half_space_velocity_matches_oracle() {
    for nu in [0.0, 0.1, 0.25, 0.34, 0.45] {
        let m = iso(nu);
        let stack = LayerStack::half_space(m, Propagation::default());
        let v = saw_phase_velocity(&stack, 50e6).unwrap();
        let vr = rayleigh_ratio_from_cubic(nu) * m.shear_velocity();
        assert!(((v - vr) / vr).abs() < 1e-6, "nu = {nu}: {v} vs {vr}");
    }
}

#[test]
fn substrate_identical_layer_is_invisible() {
    let bare = LayerStack::half_space(silicon(), Propagation::cubic_001_110());
    let v0 = saw_phase_velocity(&bare, 100e6).unwrap();
    for h in [0.3e-6, 2e-6, 10e-6] {
        let stack = LayerStack::new(
            vec![Layer::new(silicon(), h).unwrap()],
            silicon(),
            Propagation::cubic_001_110(),
        )
        .unwrap();
        for f in [50e6, 300e6] {
            let v = saw_phase_velocity(&stack, f).unwrap();
            assert!(
                ((v - v0) / v0).abs() < 1e-9,
                "h = {h}, f = {f}: {v} vs {v0}"
            );
        }
    }
}

#[test]
fn stack_1a_is_dispersive_and_decreasing() {
    let stack = stack_1a();
    let freqs: Vec<f64> = (0..10).map(|i| 50e6 + 50e6 * i as f64).collect();
    let curve = dispersion_curve(&stack, &freqs).unwrap();
    let v = curve.velocities();
    for w in v.windows(2) {
        assert!(w[1] < w[0], "{v:?}");
    }
    assert!(curve.jumps().is_empty());
    let bare = saw_phase_velocity(
        &LayerStack::half_space(silicon(), Propagation::cubic_001_110()),
        1e6,
    )
    .unwrap();
    let low = saw_phase_velocity(&stack, 0.5e6).unwrap();
    assert!(((low - bare) / bare).abs() < 5e-3, "{low} vs {bare}");
}

#[test]
fn tracked_curve_matches_independent_scans() {
    let stack = stack_1a();
    let freqs = [60e6, 140e6, 260e6, 420e6];
    let curve = dispersion_curve(&stack, &freqs).unwrap();
    for (p, &f) in curve.points().iter().zip(&freqs) {
        let v = saw_phase_velocity(&stack, f).unwrap();
        assert_relative_eq!(p.velocity, v, max_relative = 1e-10);
    }
    let near = dispersion_curve_near(
        &stack,
        &freqs,
        &curve
            .velocities()
            .iter()
            .map(|v| v * 1.01)
            .collect::<Vec<_>>(),
    )
    .unwrap();
    for (a, b) in near.points().iter().zip(curve.points()) {
        assert_relative_eq!(a.velocity, b.velocity, max_relative = 1e-10);
    }
}

#[test]
fn empty_and_invalid_frequency_lists() {
    let stack = stack_1a();
    assert!(dispersion_curve(&stack, &[]).unwrap().is_empty());
    assert!(matches!(
        dispersion_curve(&stack, &[2e8, 1e8]),
        Err(DispersionError::InvalidInput(_))
    ));
    assert!(matches!(
        saw_phase_velocity(&stack, -1.0),
        Err(DispersionError::InvalidInput(_))
    ));
}

#[test]
fn f32_instantiation_runs() {
    let m = IsotropicMaterial::<f32>::new(100e9, 0.25, 3000.0).unwrap();
    let stack = LayerStack::half_space(m, Propagation::default());
    let v = saw_phase_velocity(&stack, 1e8f32).unwrap();
    let vr = rayleigh_velocity_isotropic(&m);
    assert!(((v - vr) / vr).abs() < 1e-3);
}

#[test]
fn curve_csv_round_trip_and_errors() {
    let curve = DispersionCurve::new(vec![
        CurvePoint {
            frequency: 1e8,
            velocity: 5000.0,
            sigma: Some(2.0),
        },
        CurvePoint {
            frequency: 2e8,
            velocity: 4900.5,
            sigma: Some(1.5),
        },
    ])
    .unwrap();
    let text = curve.to_csv();
    assert!(text.starts_with(CSV_HEADER_SIGMA));
    assert!(!text.contains('\r'));
    assert_eq!(DispersionCurve::from_csv(&text).unwrap(), curve);
    let bad = "frequency_hz,phase_velocity_m_per_s\n1e8,5000\n2e8,abc\n";
    assert!(matches!(
        DispersionCurve::from_csv(bad),
        Err(DispersionError::Csv { line: 3, .. })
    ));
    let unordered = "frequency_hz,phase_velocity_m_per_s\n2e8,5000\n1e8,5000\n";
    assert!(matches!(
        DispersionCurve::from_csv(unordered),
        Err(DispersionError::Csv { line: 3, .. })
    ));
    assert!(DispersionCurve::from_csv("").is_err());
    assert!(DispersionCurve::from_csv("f,v\n").is_err());
    let empty = DispersionCurve::<f64>::empty().to_csv();
    assert_eq!(empty, format!("{CSV_HEADER}\n"));
}
