use std::path::{Path, PathBuf};

use sawfilm::dispersion::{dispersion_curve, search_window};
use sawfilm::inversion::{fit_parameters, FitProblem, Identifiability};
use sawfilm::signal::{
    calibrate_projection_ratio, estimate_fundamental, pick_harmonic_peaks, pick_mask_harmonics,
    read_waveform_csv, spectrum, spectrum_csv, synthesize_slope_signal, vph_points,
    write_waveform_csv, MaskKind, MaskSpec, Omission, SignalError,
};
use sawfilm::units::{parse_quantity, Dimension};
use sawfilm::{DispersionCurve, LayerStack};

use crate::config::{default_periods, Extraction, RunConfig};
use crate::error::CliError;
use crate::plot::{render_svg, Series};

/// Output of a command: main payload plus notes for stderr.
pub struct Output {
    pub text: String,
    pub notes: Vec<String>,
    pub extra_files: Vec<(PathBuf, String)>,
}

impl Output {
    fn text(text: String) -> Self {
        Self {
            text,
            notes: Vec::new(),
            extra_files: Vec::new(),
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))
}

fn quantity(text: &str, dim: Dimension, what: &str) -> Result<f64, CliError> {
    parse_quantity(text, dim).map_err(|e| CliError::config(format!("{what}: {e}")))
}

pub struct DispersionArgs {
    pub f_min: Option<String>,
    pub f_max: Option<String>,
    pub n_points: Option<usize>,
}

pub fn dispersion(cfg: &RunConfig, args: &DispersionArgs) -> Result<Output, CliError> {
    let stack = cfg.template()?.stack()?;
    let block = cfg.raw.dispersion.as_ref();
    let pick = |cli: &Option<String>,
                raw: Option<&crate::config::Qty>,
                key: &str|
     -> Result<f64, CliError> {
        match (cli, raw) {
            (Some(s), _) => quantity(s, Dimension::Frequency, key),
            (None, Some(q)) => q.with_unit(Dimension::Frequency, &format!("dispersion.{key}")),
            (None, None) => Err(CliError::config(format!(
                "{key} not given (flag or [dispersion] section)"
            ))),
        }
    };
    let n = args
        .n_points
        .or(block.and_then(|b| b.n_points))
        .ok_or_else(|| CliError::config("n_points not given (flag or [dispersion] section)"))?;
    if n == 0 {
        return Ok(Output::text(DispersionCurve::empty().to_csv()));
    }
    let f_min = pick(&args.f_min, block.and_then(|b| b.f_min.as_ref()), "f_min")?;
    let f_max = if n == 1 {
        f_min
    } else {
        pick(&args.f_max, block.and_then(|b| b.f_max.as_ref()), "f_max")?
    };
    if !(f_min > 0.0) || f_max < f_min || (n > 1 && f_max == f_min) {
        return Err(CliError::config(format!(
            "frequency range {f_min} .. {f_max} Hz must be positive and increasing"
        )));
    }
    let freqs: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                f_min
            } else {
                f_min + (f_max - f_min) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let curve = dispersion_curve(&stack, &freqs)?;
    let mut out = Output::text(curve.to_csv());
    for &j in curve.jumps() {
        out.notes.push(format!(
            "warning: velocity jump between points {} and {}; possible mode switch",
            j,
            j + 1
        ));
    }
    Ok(out)
}

/// Model curve dense enough to synthesize every harmonic of `period` up to
/// `f_max`.
pub fn model_curve_for_period(
    stack: &LayerStack,
    period: f64,
    f_max: f64,
) -> Result<DispersionCurve, CliError> {
    let (v_lo, _) = search_window(stack)?;
    let f_lo = 0.98 * v_lo / period;
    if !(f_lo < f_max) {
        return Err(CliError::config(format!(
            "maximum frequency {f_max} Hz lies below the lowest possible fundamental {f_lo} Hz"
        )));
    }
    let n = (((f_max - f_lo) / 5e6).ceil() as usize + 1).max(16);
    let freqs: Vec<f64> = (0..n)
        .map(|i| f_lo + (f_max - f_lo) * i as f64 / (n - 1) as f64)
        .collect();
    Ok(dispersion_curve(stack, &freqs)?)
}

pub struct SynthArgs {
    pub seed: Option<u64>,
    pub period: Option<String>,
    pub n_periods: Option<usize>,
    pub duty: Option<f64>,
}

pub fn synth(cfg: &RunConfig, args: &SynthArgs) -> Result<Output, CliError> {
    let stack = cfg.template()?.stack()?;
    let mut mask = match &args.period {
        Some(p) => {
            let period = quantity(p, Dimension::Length, "--period")?;
            let duty = cfg.raw.mask.as_ref().and_then(|m| m.duty).unwrap_or(0.5);
            MaskSpec::new(period, duty, default_periods(period), MaskKind::GlassMask)?
        }
        None => cfg.mask()?,
    };
    if let Some(n) = args.n_periods {
        mask.n_periods = n;
    }
    if let Some(d) = args.duty {
        mask.duty = d;
    }
    mask.validate()?;
    let seed = args.seed;
    let params = cfg.synthesis(cfg.seed(seed))?;
    let f_max = params.max_frequency.expect("set by config");
    let curve = model_curve_for_period(&stack, mask.period, f_max)?;
    let w = synthesize_slope_signal(&mask, &curve, &params)?;
    Ok(Output::text(write_waveform_csv(&w)))
}

pub struct ExtractArgs {
    pub waveforms: Vec<PathBuf>,
    pub period: Option<String>,
    pub n_harmonics: Option<usize>,
    pub fundamental: Option<String>,
    pub window: Option<String>,
    pub zero_pad: Option<usize>,
    pub min_prominence: Option<f64>,
    pub spectrum: Option<PathBuf>,
}

pub fn extract(cfg: &RunConfig, args: &ExtractArgs) -> Result<Output, CliError> {
    let mut ex: Extraction = cfg.extraction()?;
    if let Some(w) = &args.window {
        ex.window = w.parse::<sawfilm::signal::Window>()?;
    }
    if let Some(z) = args.zero_pad {
        ex.zero_pad = z;
    }
    if let Some(n) = args.n_harmonics {
        ex.n_harmonics = n;
    }
    if let Some(p) = args.min_prominence {
        ex.min_prominence = p;
    }
    if let Some(f) = &args.fundamental {
        ex.fundamental = Some(quantity(f, Dimension::Frequency, "--fundamental")?);
    }
    let period_override = args
        .period
        .as_deref()
        .map(|p| quantity(p, Dimension::Length, "--period"))
        .transpose()?;
    if args.waveforms.is_empty() {
        return Err(CliError::config("no waveform files given"));
    }
    if args.spectrum.is_some() && args.waveforms.len() > 1 {
        return Err(CliError::config("--spectrum needs exactly one waveform"));
    }

    let mut notes = Vec::new();
    let mut extra = Vec::new();
    let mut points = Vec::new();
    for path in &args.waveforms {
        let text = read_file(path)?;
        let w = read_waveform_csv(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let period = match (period_override, w.mask.map(|m| m.period)) {
            (Some(p), _) | (None, Some(p)) => p,
            (None, None) => cfg.mask().map(|m| m.period).map_err(|_| {
                CliError::config(format!(
                    "{}: mask period unknown (no header, --period or [mask] section)",
                    path.display()
                ))
            })?,
        };
        let s = spectrum(&w, ex.window, ex.zero_pad)?;
        if let Some(sp) = &args.spectrum {
            extra.push((sp.clone(), spectrum_csv(&s)));
        }
        let hint = match ex.fundamental {
            Some(f) => f,
            None => estimate_fundamental(&s).map_err(|e| match e {
                SignalError::NoFundamental { .. } => {
                    CliError::Extraction(format!("{}: no fundamental peak found", path.display()))
                }
                other => other.into(),
            })?,
        };
        // The grating duty decides which orders can exist; use it when the
        // waveform header or the config states it.
        let grating = match w.mask {
            Some(m) if m.n_periods > 0 => Some(m),
            _ => cfg.mask().ok(),
        };
        let report = match grating {
            Some(m) => pick_mask_harmonics(
                &s,
                hint,
                ex.n_harmonics,
                ex.min_prominence,
                &MaskSpec { period, ..m },
            ),
            None => pick_harmonic_peaks(&s, hint, ex.n_harmonics, ex.min_prominence),
        }
        .map_err(|e| match e {
            SignalError::NoFundamental { hint } => CliError::Extraction(format!(
                "{}: no fundamental peak near {:.6e} Hz",
                path.display(),
                hint
            )),
            other => other.into(),
        })?;
        for (n, why) in &report.omitted {
            let reason = match why {
                Omission::OutOfBand => continue,
                Omission::NoPeak => "no peak".to_string(),
                Omission::BelowProminence { relative_amplitude } => {
                    format!("below prominence ({relative_amplitude:.3e} of fundamental)")
                }
            };
            notes.push(format!(
                "{}: harmonic {n} omitted: {reason}",
                path.display()
            ));
        }
        let frag = vph_points(&report.peaks, period)?;
        points.extend_from_slice(frag.points());
    }
    let merged =
        DispersionCurve::from_unsorted(points).map_err(|e| CliError::config(e.to_string()))?;
    Ok(Output {
        text: merged.to_csv(),
        notes,
        extra_files: extra,
    })
}

pub struct CalibrateArgs {
    pub measurements: PathBuf,
    pub pixel_pitch: Option<String>,
    pub v_reference: Option<String>,
}

/// Parses `period_pixels,frequency_hz` rows.
pub fn parse_measurements(text: &str) -> Result<Vec<(u32, f64)>, CliError> {
    let mut rows = Vec::new();
    let mut header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let n = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header {
            if line.replace(' ', "") != "period_pixels,frequency_hz" {
                return Err(CliError::config(format!(
                    "line {n}: expected header `period_pixels,frequency_hz`"
                )));
            }
            header = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(CliError::config(format!("line {n}: expected two columns")));
        }
        let p: u32 = cols[0]
            .parse()
            .map_err(|_| CliError::config(format!("line {n}: bad period_pixels `{}`", cols[0])))?;
        let f: f64 = cols[1]
            .parse()
            .map_err(|_| CliError::config(format!("line {n}: bad frequency `{}`", cols[1])))?;
        if !(f > 0.0 && f.is_finite()) || p < 2 {
            return Err(CliError::config(format!("line {n}: values out of range")));
        }
        rows.push((p, f));
    }
    if rows.is_empty() {
        return Err(CliError::config("no calibration measurements"));
    }
    Ok(rows)
}

pub fn calibrate(cfg: &RunConfig, args: &CalibrateArgs) -> Result<Output, CliError> {
    let rows = parse_measurements(&read_file(&args.measurements)?)?;
    let (cfg_pitch, cfg_v) = cfg.calibration()?;
    let pitch = match &args.pixel_pitch {
        Some(p) => quantity(p, Dimension::Length, "--pixel-pitch")?,
        None => cfg_pitch.ok_or_else(|| {
            CliError::config("pixel pitch not given (--pixel-pitch or [calibration])")
        })?,
    };
    let v_ref = match &args.v_reference {
        Some(v) => quantity(v, Dimension::Velocity, "--v-reference")?,
        None => cfg_v,
    };
    let cal = calibrate_projection_ratio(&rows, pitch, v_ref)?;
    let mut text = format!("projection_ratio = {:.6}\n", cal.ratio);
    match cal.sigma {
        Some(s) => text.push_str(&format!("sigma = {s:.6}\n")),
        None => text.push_str("sigma = undefined (single measurement)\n"),
    }
    text.push_str(&format!("measurements = {}\n", rows.len()));
    text.push_str(&format!(
        "pixel_pitch_m = {pitch:e}\nv_reference_m_per_s = {v_ref}\n"
    ));
    let mut out = Output::text(text);
    if cal.sigma.is_none() {
        out.notes
            .push("warning: one measurement; ratio uncertainty undefined".into());
    }
    Ok(out)
}

pub fn fit(
    cfg: &RunConfig,
    measured: &Path,
    estimates: Option<PathBuf>,
) -> Result<Output, CliError> {
    let template = cfg.template()?;
    let curve = DispersionCurve::from_csv(&read_file(measured)?)
        .map_err(|e| CliError::config(format!("{}: {e}", measured.display())))?;
    let (params, options) = cfg.fit(&template)?;
    let problem = FitProblem::new(template, params, curve, options)?;
    let result = fit_parameters(&problem)?;
    let mut out = Output::text(result.report(&problem));
    if !result.status.converged() {
        out.notes.push(format!(
            "warning: fit did not converge ({:?}); reporting best-so-far",
            result.status
        ));
    }
    for d in &result.identifiability.params {
        if d.flag == Identifiability::WeaklyDetermined {
            out.notes.push(format!(
                "warning: {} is weakly determined by the data; consider fixing it",
                d.name
            ));
        }
    }
    for e in result.estimates.iter().filter(|e| e.at_bound) {
        out.notes
            .push(format!("warning: {} ended on a bound", e.name));
    }
    if let Some(p) = estimates {
        out.extra_files.push((p, result.estimates_csv()));
    }
    Ok(out)
}

pub fn plot(
    curves: &[PathBuf],
    models: &[PathBuf],
    title: Option<&str>,
) -> Result<Output, CliError> {
    if curves.is_empty() && models.is_empty() {
        return Err(CliError::config("plot needs at least one curve"));
    }
    let mut series = Vec::new();
    for (path, force_line) in curves
        .iter()
        .map(|p| (p, false))
        .chain(models.iter().map(|p| (p, true)))
    {
        let c = DispersionCurve::from_csv(&read_file(path)?)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let measured = !force_line && c.points().iter().any(|p| p.sigma.is_some());
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        series.push(Series {
            label,
            points: c
                .points()
                .iter()
                .map(|p| (p.frequency, p.velocity, p.sigma))
                .collect(),
            measured,
        });
    }
    Ok(Output::text(render_svg(&series, title)))
}
