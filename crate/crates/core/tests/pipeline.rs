use sawfilm::dispersion::{dispersion_curve, saw_phase_velocity};
use sawfilm::inversion::{
    fit_parameters, FitOptions, FitProblem, FreeParam, LayerModel, LayerTemplate, StackTemplate,
};
use sawfilm::materials::{MaterialDb, MaterialEntry};
use sawfilm::signal::{
    estimate_fundamental, pick_mask_harmonics, spectrum, synthesize_slope_signal, vph_points,
    MaskKind, MaskSpec, SynthesisParams, Window,
};
use sawfilm::{DispersionCurve, LayerStack, Propagation};

fn template(c_ge: f64, d: f64) -> StackTemplate {
    let db = MaterialDb::builtin();
    let MaterialEntry::Alloy(endpoints) = db.get("SiGe").unwrap().entry else {
        panic!("SiGe is an alloy record")
    };
    let MaterialEntry::Elastic(si) = db.get("Si").unwrap().entry else {
        panic!("Si is an elastic record")
    };
    let MaterialEntry::Elastic(oxide) = db.get("SiO2_thermal").unwrap().entry else {
        panic!("SiO2_thermal is an elastic record")
    };
    StackTemplate {
        layers: vec![
            LayerTemplate {
                name: "SiGe".into(),
                model: LayerModel::Alloy { endpoints, c_ge },
                thickness: d,
            },
            LayerTemplate {
                name: "SiO2".into(),
                model: LayerModel::Fixed(oxide),
                thickness: 2.435e-6,
            },
        ],
        substrate: si,
        propagation: Propagation::cubic_001_110(),
    }
}

#[test]
fn builtin_silicon_is_dispersionless() {
    let MaterialEntry::Elastic(si) = MaterialDb::builtin().get("Si").unwrap().entry else {
        panic!()
    };
    let stack = LayerStack::half_space(si, Propagation::cubic_001_110());
    let v = saw_phase_velocity(&stack, 100e6).unwrap();
    assert!((v - 5080.0).abs() < 0.005 * 5080.0, "{v}");
    assert_eq!(saw_phase_velocity(&stack, 900e6).unwrap(), v);
}

#[test]
fn waveform_to_film_parameters() {
    let truth = template(0.179, 1.02e-6);
    let stack = truth.stack().unwrap();
    let freqs: Vec<f64> = (0..=60).map(|i| 30e6 + 10e6 * i as f64).collect();
    let model = dispersion_curve(&stack, &freqs).unwrap();

    let mut points = Vec::new();
    for (period, n_periods) in [(32e-6, 300), (48e-6, 200), (96e-6, 100)] {
        let mask = MaskSpec::new(period, 0.3, n_periods, MaskKind::GlassMask).unwrap();
        let params = SynthesisParams {
            noise_rms: 0.01,
            seed: Some(11),
            max_frequency: Some(520e6),
            ..SynthesisParams::default()
        };
        let w = synthesize_slope_signal(&mask, &model, &params).unwrap();
        let s = spectrum(&w, Window::Hann, 4).unwrap();
        let report =
            pick_mask_harmonics(&s, estimate_fundamental(&s).unwrap(), 12, 0.05, &mask).unwrap();
        points.extend_from_slice(vph_points(&report.peaks, period).unwrap().points());
    }
    let measured = DispersionCurve::from_unsorted(points).unwrap();
    assert!(measured.len() >= 10);

    let params = vec![
        FreeParam::new("SiGe.c_ge", 0.25, 0.0, 1.0),
        FreeParam::new("SiGe.thickness", 0.8e-6, 0.2e-6, 3e-6),
    ];
    let problem = FitProblem::new(
        template(0.25, 0.8e-6),
        params,
        measured,
        FitOptions::default(),
    )
    .unwrap();
    let fit = fit_parameters(&problem).unwrap();
    assert!(fit.status.converged(), "{:?}", fit.status);
    assert!((fit.value("SiGe.c_ge").unwrap() - 0.179).abs() < 0.005);
    assert!((fit.value("SiGe.thickness").unwrap() - 1.02e-6).abs() < 20e-9);
}
