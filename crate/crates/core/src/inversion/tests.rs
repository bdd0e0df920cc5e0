use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use super::identifiability::from_jacobian;
use super::*;
use crate::dispersion::{dispersion_curve, CurvePoint, DispersionError, PointFailure};
use crate::materials::{MaterialDb, MaterialEntry};
use crate::{DispersionCurve, Propagation};

fn endpoints() -> crate::AlloyEndpoints {
    match MaterialDb::builtin().get("SiGe").unwrap().entry {
        MaterialEntry::Alloy(a) => a,
        _ => unreachable!(),
    }
}

fn elastic(name: &str) -> crate::ElasticMaterial {
    match MaterialDb::builtin().get(name).unwrap().entry {
        MaterialEntry::Elastic(m) => m,
        _ => unreachable!(),
    }
}

fn template(c_ge: f64, d: f64, oxide: bool) -> StackTemplate {
    let mut layers = vec![LayerTemplate {
        name: "SiGe".into(),
        model: LayerModel::Alloy {
            endpoints: endpoints(),
            c_ge,
        },
        thickness: d,
    }];
    if oxide {
        layers.push(LayerTemplate {
            name: "SiO2".into(),
            model: LayerModel::Fixed(elastic("SiO2_thermal")),
            thickness: 2.435e-6,
        });
    }
    StackTemplate {
        layers,
        substrate: elastic("Si"),
        propagation: Propagation::cubic_001_110(),
    }
}

fn synthetic(t: &StackTemplate, n: usize) -> DispersionCurve {
    let f: Vec<f64> = (0..n)
        .map(|i| 40e6 + 480e6 * i as f64 / (n - 1) as f64)
        .collect();
    dispersion_curve(&t.stack().unwrap(), &f)
        .unwrap()
        .with_sigma(|p| 1e-3 * p.velocity)
}

fn params(c: f64, d: f64) -> Vec<FreeParam> {
    vec![
        FreeParam::new("SiGe.c_ge", c, 0.0, 1.0),
        FreeParam::new("SiGe.thickness", d, 0.1e-6, 5e-6),
    ]
}

#[test]
fn coupling_reproduces_mixing_values() {
    let ep = endpoints();
    let (e, rho) = apply_coupling(0.179, &ep).unwrap();
    assert!((e - 155e9).abs() < 0.1e9);
    assert!((rho - 2865.0).abs() < 10.0);
    let (e, _) = apply_coupling(0.416, &ep).unwrap();
    assert!((e - 148.36e9).abs() < 0.1e9);
    assert_eq!(apply_coupling(0.0, &ep).unwrap(), (ep.e_si, ep.rho_si));
    assert!(apply_coupling(1.2, &ep).is_err());
}

#[test]
fn problem_validation() {
    let t = template(0.179, 1.02e-6, true);
    let m = synthetic(&t, 6);
    let ok = |p: Vec<FreeParam>| FitProblem::new(t.clone(), p, m.clone(), FitOptions::default());
    assert!(ok(params(0.179, 1.02e-6)).is_ok());
    assert!(ok(vec![
        FreeParam::new("SiGe.c_ge", 0.2, 0.0, 1.0),
        FreeParam::new("SiGe.c_ge", 0.2, 0.0, 1.0)
    ])
    .is_err());
    assert!(ok(vec![FreeParam::new("Ge.c_ge", 0.2, 0.0, 1.0)]).is_err());
    assert!(ok(vec![FreeParam::new("SiGe.colour", 0.2, 0.0, 1.0)]).is_err());
    assert!(ok(vec![FreeParam::new("SiO2.c_ge", 0.2, 0.0, 1.0)]).is_err());
    assert!(ok(vec![FreeParam::new("SiGe.c_ge", 0.2, 1.0, 0.0)]).is_err());
    assert!(matches!(
        ok(vec![FreeParam::new("SiGe.c_ge", 1.5, 0.0, 1.0)]),
        Err(InversionError::OutOfBounds { .. })
    ));
    assert!(ok(vec![FreeParam::new("SiGe.c_ge", 0.2, 0.0, 1.0).log()]).is_err());
    assert!(ok(vec![FreeParam::new("SiGe.thickness", 1e-6, 1e-6, 1e-6)]).is_err());

    let few = synthetic(&t, 2);
    let three = vec![
        FreeParam::new("SiGe.c_ge", 0.2, 0.0, 1.0),
        FreeParam::new("SiGe.thickness", 1e-6, 0.5e-6, 2e-6),
        FreeParam::new("SiO2.thickness", 2.4e-6, 2e-6, 3e-6),
    ];
    assert!(FitProblem::new(t.clone(), three, few, FitOptions::default()).is_err());

    let bare = DispersionCurve::new(
        m.points()
            .iter()
            .map(|p| CurvePoint { sigma: None, ..*p })
            .collect(),
    )
    .unwrap();
    assert!(FitProblem::new(
        t.clone(),
        params(0.2, 1e-6),
        bare.clone(),
        FitOptions::default()
    )
    .is_err());
    let opts = FitOptions {
        default_sigma: Some(5.0),
        ..Default::default()
    };
    let p = FitProblem::new(t.clone(), params(0.2, 1e-6), bare, opts).unwrap();
    assert!(p.sigmas().iter().all(|&s| s == 5.0));
}

#[test]
fn residuals_vanish_at_truth_and_scale_with_sigma() {
    let t = template(0.179, 1.02e-6, true);
    let m = synthetic(&t, 8);
    let p = FitProblem::new(
        t.clone(),
        params(0.179, 1.02e-6),
        m.clone(),
        FitOptions::default(),
    )
    .unwrap();
    let r = residuals(&p, &[0.179, 1.02e-6]).unwrap();
    assert!(r.iter().all(|v| v.abs() < 1e-9), "{r:?}");

    let r1 = residuals(&p, &[0.2, 1.0e-6]).unwrap();
    let doubled = m.clone().with_sigma(|pt| 2e-3 * pt.velocity);
    let p2 = FitProblem::new(t, params(0.179, 1.02e-6), doubled, FitOptions::default()).unwrap();
    let r2 = residuals(&p2, &[0.2, 1.0e-6]).unwrap();
    for (a, b) in r1.iter().zip(&r2) {
        assert_relative_eq!(*b, 0.5 * a, max_relative = 1e-12);
    }
    assert!(residuals(&p2, &[1.5, 1.0e-6]).is_err());
}

#[test]
fn stiffer_film_gives_positive_residuals() {
    let ep = endpoints();
    let film = ep.material(0.179).unwrap();
    let mut t = template(0.179, 1.02e-6, true);
    t.layers[0].model = LayerModel::Isotropic(film);
    let m = synthetic(&t, 8);
    let e0 = film.young_modulus;
    let p = FitProblem::new(
        t,
        vec![FreeParam::new("SiGe.young_modulus", e0, 0.5 * e0, 2.0 * e0).log()],
        m,
        FitOptions::default(),
    )
    .unwrap();
    let r = residuals(&p, &[1.05 * e0]).unwrap();
    assert!(r.iter().all(|&v| v > 0.0), "{r:?}");
}

fn check_noise_free_recovery(c: f64, d: f64, oxide: bool, start: (f64, f64)) {
    let t = template(c, d, oxide);
    let m = synthetic(&t, 24);
    let p = FitProblem::new(
        t,
        params(c * start.0, d * start.1),
        m,
        FitOptions::default(),
    )
    .unwrap();
    let fit = fit_parameters(&p).unwrap();
    assert!(fit.status.converged(), "{:?}", fit.status);
    assert_relative_eq!(fit.value("SiGe.c_ge").unwrap(), c, max_relative = 1e-6);
    assert_relative_eq!(fit.value("SiGe.thickness").unwrap(), d, max_relative = 1e-6);
    assert!(fit.gradient_end <= 1e-6 * fit.gradient_start);
    let cov = &fit.covariance;
    assert!((cov - cov.transpose()).abs().max() <= 1e-12 * cov.abs().max());
    assert!(cov
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .all(|&l| l >= -1e-12 * cov.abs().max()));
}

#[test]
fn noise_free_recovery_1a() {
    check_noise_free_recovery(0.179, 1.02e-6, true, (1.2, 0.8));
    check_noise_free_recovery(0.179, 1.02e-6, true, (0.8, 1.2));
}

#[test]
fn noise_free_recovery_sample_2() {
    check_noise_free_recovery(0.624, 0.71e-6, true, (0.8, 1.2));
    check_noise_free_recovery(0.624, 0.71e-6, true, (1.2, 0.8));
}

#[test]
fn common_sigma_scaling_keeps_argmin_and_flags() {
    let truth = template(0.179, 1.02e-6, true);
    let mut m = synthetic(&truth, 12);
    // A non-zero-residual problem: bend the data slightly.
    let bent: Vec<CurvePoint<f64>> = m
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| CurvePoint {
            velocity: p.velocity * (1.0 + 1e-3 * ((i * 7 % 5) as f64 - 2.0)),
            ..*p
        })
        .collect();
    m = DispersionCurve::new(bent).unwrap();
    let run = |scale: f64| {
        let mm = m.clone().with_sigma(|p| scale * 1e-3 * p.velocity);
        let p = FitProblem::new(
            truth.clone(),
            params(0.2, 1.0e-6),
            mm,
            FitOptions::default(),
        )
        .unwrap();
        fit_parameters(&p).unwrap()
    };
    let a = run(1.0);
    let b = run(3.0);
    for (ea, eb) in a.estimates.iter().zip(&b.estimates) {
        assert_relative_eq!(ea.value, eb.value, max_relative = 1e-5);
        assert_relative_eq!(eb.sigma, 3.0 * ea.sigma, max_relative = 1e-3);
    }
    for (pa, pb) in a
        .identifiability
        .params
        .iter()
        .zip(&b.identifiability.params)
    {
        assert_eq!(pa.flag, pb.flag);
    }
}

#[test]
fn identifiability_separates_curved_from_linear_dispersion() {
    let t = template(0.179, 1.02e-6, true);
    let p = FitProblem::new(
        t.clone(),
        params(0.179, 1.02e-6),
        synthetic(&t, 30),
        FitOptions::default(),
    )
    .unwrap();
    let rep = identifiability_report(&p, &[0.179, 1.02e-6]).unwrap();
    assert_eq!(rep.flag("SiGe.c_ge"), Some(Identifiability::WellDetermined));
    assert_eq!(
        rep.flag("SiGe.thickness"),
        Some(Identifiability::WellDetermined)
    );
    assert!(rep.recommendation().is_none());

    let t3 = template(0.416, 0.9e-6, false);
    let p3 = FitProblem::new(
        t3.clone(),
        params(0.416, 0.9e-6),
        synthetic(&t3, 30),
        FitOptions::default(),
    )
    .unwrap();
    let rep3 = identifiability_report(&p3, &[0.416, 0.9e-6]).unwrap();
    assert_eq!(
        rep3.flag("SiGe.c_ge"),
        Some(Identifiability::WellDetermined)
    );
    assert_eq!(
        rep3.flag("SiGe.thickness"),
        Some(Identifiability::WeaklyDetermined)
    );
    assert_eq!(rep3.weak(), vec!["SiGe.thickness"]);
    assert!(rep3.recommendation().unwrap().contains("SiGe.thickness"));

    let single = FitProblem::new(
        t3.clone(),
        vec![
            FreeParam::new("SiGe.c_ge", 0.416, 0.0, 1.0),
            FreeParam::new("SiGe.thickness", 0.9e-6, 0.9e-6, 0.9e-6),
        ],
        synthetic(&t3, 30),
        FitOptions::default(),
    )
    .unwrap();
    let rep = identifiability_report(&single, &[0.416, 0.9e-6]).unwrap();
    assert_eq!(rep.flag("SiGe.c_ge"), Some(Identifiability::WellDetermined));
    assert_eq!(rep.flag("SiGe.thickness"), Some(Identifiability::Fixed));
}

#[test]
fn identifiability_rules_on_synthetic_jacobians() {
    let t = template(0.179, 1.02e-6, true);
    let p = FitProblem::new(
        t.clone(),
        params(0.5, 1e-6),
        synthetic(&t, 6),
        FitOptions::default(),
    )
    .unwrap();
    let x = [0.5, 1e-6];
    let unit = |_: usize| 1.0;
    // Zero column: no sensitivity.
    let j = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
    let rep = from_jacobian(&p, &[0, 1], &x, &j, unit);
    assert_eq!(rep.params[0].flag, Identifiability::WellDetermined);
    assert_eq!(rep.params[1].flag, Identifiability::WeaklyDetermined);
    // Parallel columns.
    let j = DMatrix::from_row_slice(3, 2, &[1.0, 2e6, 2.0, 4e6, 3.0, 6e6]);
    let rep = from_jacobian(&p, &[0, 1], &x, &j, unit);
    assert_eq!(rep.params[1].flag, Identifiability::WeaklyDetermined);
    assert!(rep.condition_number > 1e6);
    // Orthogonal columns.
    let j = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1e6, 0.0, 0.0]);
    let rep = from_jacobian(&p, &[0, 1], &x, &j, unit);
    assert!(rep
        .params
        .iter()
        .all(|d| d.flag == Identifiability::WellDetermined));
    assert_relative_eq!(rep.condition_number, 1.0, max_relative = 1e-12);
}

#[test]
fn iteration_cap_returns_best_so_far() {
    let t = template(0.179, 1.02e-6, true);
    let m = synthetic(&t, 12);
    let opts = FitOptions {
        max_iterations: 1,
        ..Default::default()
    };
    let p = FitProblem::new(t, params(0.25, 0.8e-6), m, opts).unwrap();
    let start = residuals(&p, &[0.25, 0.8e-6]).unwrap();
    let start_cost: f64 = start.iter().map(|v| v * v).sum();
    let fit = fit_parameters(&p).unwrap();
    assert_eq!(fit.status, ConvergenceStatus::IterationCap);
    assert!(!fit.status.converged());
    assert_eq!(fit.n_iterations, 1);
    let end_cost = fit.weighted_rms.powi(2) * 12.0;
    assert!(end_cost < start_cost);
}

#[test]
fn bound_stuck_parameters_are_flagged() {
    let t = template(0.179, 1.02e-6, true);
    let m = synthetic(&t, 12);
    let p = FitProblem::new(
        t,
        vec![
            FreeParam::new("SiGe.c_ge", 0.3, 0.25, 0.5),
            FreeParam::new("SiGe.thickness", 1.02e-6, 1.02e-6, 1.02e-6),
        ],
        m,
        FitOptions::default(),
    )
    .unwrap();
    let fit = fit_parameters(&p).unwrap();
    let e = fit.estimate("SiGe.c_ge").unwrap();
    assert!(e.at_bound);
    assert_relative_eq!(e.value, 0.25);
    assert!(fit.estimate("SiGe.thickness").unwrap().fixed);
}

#[test]
fn forward_failures_name_the_point() {
    let err: InversionError = DispersionError::Points(vec![PointFailure {
        index: 3,
        frequency: 2.5e8,
        error: Box::new(DispersionError::NotSubsonic { velocity: 6000.0 }),
    }])
    .into();
    match err {
        InversionError::Forward {
            index, frequency, ..
        } => {
            assert_eq!(index, 3);
            assert_eq!(frequency, 2.5e8);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(err_text(2.5e8).contains("2.5"));
}

fn err_text(f: f64) -> String {
    InversionError::Forward {
        index: 0,
        frequency: f,
        source: Box::new(DispersionError::NotSubsonic { velocity: 6000.0 }),
    }
    .to_string()
}

#[test]
fn report_and_csv_layout() {
    let t = template(0.179, 1.02e-6, true);
    let m = synthetic(&t, 10);
    let p = FitProblem::new(t, params(0.2, 1.0e-6), m, FitOptions::default()).unwrap();
    let fit = fit_parameters(&p).unwrap();
    let text = fit.report(&p);
    for section in [
        "== inputs ==",
        "== estimates ==",
        "== covariance ==",
        "== identifiability ==",
        "== residuals ==",
    ] {
        assert!(text.contains(section), "missing {section}");
    }
    let csv = fit.estimates_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("name,value,sigma,unit,flag"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "SiGe.c_ge");
    assert_eq!(row[4], "well-determined");
}

proptest! {
    #[test]
    fn transforms_round_trip(x in 1e-9f64..1e12) {
        for t in [Transform::Linear, Transform::Log] {
            let back = t.inverse(t.forward(x));
            prop_assert!((back - x).abs() <= 1e-12 * x);
        }
    }

    #[test]
    fn coupling_is_affine(c in 0.0f64..1.0) {
        let ep = endpoints();
        let (e, rho) = apply_coupling(c, &ep).unwrap();
        prop_assert!((e - (ep.e_si + c * (ep.e_ge - ep.e_si))).abs() <= 1e-6 * e);
        prop_assert!((rho - (ep.rho_si + c * (ep.rho_ge - ep.rho_si))).abs() <= 1e-9 * rho);
    }
}
