//! TOML run configuration.

use std::path::{Path, PathBuf};

use sawfilm::inversion::{
    FitOptions, FreeParam, LayerModel, LayerTemplate, Quantity, StackTemplate, Transform,
};
use sawfilm::materials::{load_material_db, ElasticMaterial, MaterialDb, MaterialEntry};
use sawfilm::nalgebra::Vector3;
use sawfilm::signal::{MaskKind, MaskSpec, SlmSpec, SynthesisParams, Window};
use sawfilm::units::{parse_quantity, Dimension};
use sawfilm::Propagation;
use serde::Deserialize;

use crate::error::CliError;

/// A number or a string with a unit suffix.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Qty {
    Num(f64),
    Text(String),
}

impl Qty {
    pub fn with_unit(&self, dim: Dimension, key: &str) -> Result<f64, CliError> {
        match self {
            Qty::Text(s) => {
                parse_quantity(s, dim).map_err(|e| CliError::config(format!("{key}: {e}")))
            }
            Qty::Num(v) => Err(CliError::config(format!(
                "{key}: bare number {v} needs a unit suffix ({dim})"
            ))),
        }
    }

    pub fn plain(&self, key: &str) -> Result<f64, CliError> {
        match self {
            Qty::Num(v) => Ok(*v),
            Qty::Text(s) => s
                .trim()
                .parse()
                .map_err(|_| CliError::config(format!("{key}: `{s}` is not a number"))),
        }
    }

    fn for_quantity(&self, q: Quantity, key: &str) -> Result<f64, CliError> {
        match q {
            Quantity::Thickness => self.with_unit(Dimension::Length, key),
            Quantity::YoungModulus => self.with_unit(Dimension::Pressure, key),
            Quantity::Density => self.with_unit(Dimension::Density, key),
            Quantity::PoissonRatio | Quantity::GeFraction => self.plain(key),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub materials: Option<String>,
    pub seed: Option<u64>,
    pub stack: Option<RawStack>,
    pub dispersion: Option<RawDispersion>,
    pub synthesis: Option<RawSynthesis>,
    pub mask: Option<RawMask>,
    pub extraction: Option<RawExtraction>,
    pub calibration: Option<RawCalibration>,
    pub fit: Option<RawFit>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawStack {
    pub substrate: String,
    pub orientation: Option<String>,
    pub normal: Option<[f64; 3]>,
    pub direction: Option<[f64; 3]>,
    #[serde(default)]
    pub layers: Vec<RawLayer>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLayer {
    pub name: Option<String>,
    pub material: String,
    pub thickness: Qty,
    pub c_ge: Option<f64>,
    pub poisson_ratio: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDispersion {
    pub f_min: Option<Qty>,
    pub f_max: Option<Qty>,
    pub n_points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSynthesis {
    pub distance: Option<Qty>,
    pub pulse_fwhm: Option<Qty>,
    pub sample_rate: Option<Qty>,
    pub duration: Option<Qty>,
    pub noise_rms: Option<f64>,
    pub max_frequency: Option<Qty>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMask {
    pub kind: Option<String>,
    pub period: Option<Qty>,
    pub duty: Option<f64>,
    pub n_periods: Option<usize>,
    pub pixel_pitch: Option<Qty>,
    pub period_pixels: Option<u32>,
    pub projection_ratio: Option<f64>,
    pub ratio_sigma: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawExtraction {
    pub window: Option<String>,
    pub zero_pad: Option<usize>,
    pub n_harmonics: Option<usize>,
    pub min_prominence: Option<f64>,
    pub fundamental: Option<Qty>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCalibration {
    pub pixel_pitch: Option<Qty>,
    pub v_reference: Option<Qty>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFit {
    pub default_sigma: Option<Qty>,
    pub max_iterations: Option<usize>,
    pub sensitivity_threshold: Option<f64>,
    pub condition_threshold: Option<f64>,
    #[serde(default)]
    pub params: Vec<RawParam>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParam {
    pub name: String,
    pub initial: Qty,
    pub lower: Option<Qty>,
    pub upper: Option<Qty>,
    pub transform: Option<String>,
    #[serde(default)]
    pub fixed: bool,
}

/// Loaded configuration with its material database resolved.
pub struct RunConfig {
    pub raw: RawConfig,
    pub db: MaterialDb,
    pub path: Option<PathBuf>,
}

pub const DEFAULT_MAX_FREQUENCY: f64 = 600e6;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, path.parent())?;
        cfg.path = Some(path.to_path_buf());
        Ok(cfg)
    }

    /// Parses config text; a relative `materials` path resolves against
    /// `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, CliError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))?;
        let db = match &raw.materials {
            Some(p) => {
                let p = Path::new(p);
                let full = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.to_path_buf(),
                };
                load_material_db(&full)?
            }
            None => MaterialDb::builtin(),
        };
        let cfg = Self {
            raw,
            db,
            path: None,
        };
        if cfg.raw.stack.is_some() {
            cfg.template()?;
        }
        Ok(cfg)
    }

    pub fn empty() -> Self {
        Self {
            raw: RawConfig {
                materials: None,
                seed: None,
                stack: None,
                dispersion: None,
                synthesis: None,
                mask: None,
                extraction: None,
                calibration: None,
                fit: None,
            },
            db: MaterialDb::builtin(),
            path: None,
        }
    }

    fn elastic(&self, name: &str) -> Result<ElasticMaterial<f64>, CliError> {
        match self.db.get(name).map(|r| r.entry) {
            Some(MaterialEntry::Elastic(m)) => Ok(m),
            Some(MaterialEntry::Alloy(_)) => Err(CliError::config(format!(
                "material `{name}` is an alloy and needs a composition; it cannot be a substrate"
            ))),
            None => Err(CliError::config(format!("unknown material `{name}`"))),
        }
    }

    pub fn propagation(&self) -> Result<Propagation, CliError> {
        let s = self.stack_block()?;
        match (&s.normal, &s.direction, s.orientation.as_deref()) {
            (Some(n), Some(d), None) => Propagation::new(Vector3::from(*n), Vector3::from(*d))
                .map_err(|e| CliError::config(format!("stack geometry: {e}"))),
            (None, None, None | Some("001/110")) => Ok(Propagation::cubic_001_110()),
            (None, None, Some("001/100")) => Ok(Propagation::cubic_001_100()),
            (None, None, Some(other)) => Err(CliError::config(format!(
                "unknown orientation `{other}` (expected 001/110 or 001/100)"
            ))),
            _ => Err(CliError::config(
                "stack geometry: give either `orientation` or both `normal` and `direction`",
            )),
        }
    }

    fn stack_block(&self) -> Result<&RawStack, CliError> {
        self.raw
            .stack
            .as_ref()
            .ok_or_else(|| CliError::config("config has no [stack] section"))
    }

    pub fn template(&self) -> Result<StackTemplate, CliError> {
        let s = self.stack_block()?;
        let substrate = self.elastic(&s.substrate)?;
        let mut layers = Vec::new();
        for (i, l) in s.layers.iter().enumerate() {
            let name = l.name.clone().unwrap_or_else(|| l.material.clone());
            if layers.iter().any(|x: &LayerTemplate| x.name == name) {
                return Err(CliError::config(format!("duplicate layer name `{name}`")));
            }
            let key = format!("stack.layers[{i}].thickness");
            let thickness = l.thickness.with_unit(Dimension::Length, &key)?;
            let record = self
                .db
                .get(&l.material)
                .ok_or_else(|| CliError::config(format!("unknown material `{}`", l.material)))?;
            let model = match record.entry {
                MaterialEntry::Alloy(mut endpoints) => {
                    let c_ge = l.c_ge.ok_or_else(|| {
                        CliError::config(format!(
                            "layer `{name}` uses alloy `{}` and needs `c_ge`",
                            l.material
                        ))
                    })?;
                    if let Some(nu) = l.poisson_ratio {
                        endpoints.poisson_ratio = nu;
                    }
                    endpoints.material(c_ge)?;
                    LayerModel::Alloy { endpoints, c_ge }
                }
                MaterialEntry::Elastic(ElasticMaterial::Isotropic(mut m)) => {
                    if l.c_ge.is_some() {
                        return Err(CliError::config(format!(
                            "layer `{name}`: `c_ge` applies to alloys only"
                        )));
                    }
                    if let Some(nu) = l.poisson_ratio {
                        m.poisson_ratio = nu;
                        m.validate()?;
                    }
                    LayerModel::Isotropic(m)
                }
                MaterialEntry::Elastic(m) => {
                    if l.c_ge.is_some() || l.poisson_ratio.is_some() {
                        return Err(CliError::config(format!(
                            "layer `{name}`: anisotropic material takes no `c_ge` or `poisson_ratio`"
                        )));
                    }
                    LayerModel::Fixed(m)
                }
            };
            layers.push(LayerTemplate {
                name,
                model,
                thickness,
            });
        }
        let t = StackTemplate {
            layers,
            substrate,
            propagation: self.propagation()?,
        };
        t.stack()?;
        Ok(t)
    }

    pub fn seed(&self, cli: Option<u64>) -> Option<u64> {
        cli.or(self.raw.seed)
    }

    /// Mask from the `[mask]` section.
    pub fn mask(&self) -> Result<MaskSpec, CliError> {
        let m = self
            .raw
            .mask
            .as_ref()
            .ok_or_else(|| CliError::config("config has no [mask] section"))?;
        let duty = m.duty.unwrap_or(0.5);
        let kind = m.kind.as_deref().unwrap_or("glass");
        match kind {
            "glass" => {
                let period = m
                    .period
                    .as_ref()
                    .ok_or_else(|| CliError::config("mask.period is required for a glass mask"))?
                    .with_unit(Dimension::Length, "mask.period")?;
                let n = m.n_periods.unwrap_or(default_periods(period));
                Ok(MaskSpec::new(period, duty, n, MaskKind::GlassMask)?)
            }
            "slm" => {
                let slm = self.slm()?;
                Ok(slm.mask(duty, m.n_periods.unwrap_or(100))?)
            }
            other => Err(CliError::config(format!(
                "unknown mask kind `{other}` (glass or slm)"
            ))),
        }
    }

    pub fn slm(&self) -> Result<SlmSpec, CliError> {
        let m = self
            .raw
            .mask
            .as_ref()
            .ok_or_else(|| CliError::config("config has no [mask] section"))?;
        let need =
            |what: &str| CliError::config(format!("mask.{what} is required for an SLM mask"));
        let slm = SlmSpec {
            pixel_pitch: m
                .pixel_pitch
                .as_ref()
                .ok_or_else(|| need("pixel_pitch"))?
                .with_unit(Dimension::Length, "mask.pixel_pitch")?,
            period_pixels: m.period_pixels.ok_or_else(|| need("period_pixels"))?,
            projection_ratio: m.projection_ratio.ok_or_else(|| need("projection_ratio"))?,
            ratio_sigma: m.ratio_sigma.unwrap_or(0.0),
        };
        slm.validate()?;
        Ok(slm)
    }

    pub fn synthesis(&self, seed: Option<u64>) -> Result<SynthesisParams, CliError> {
        let d = SynthesisParams::default();
        let Some(s) = &self.raw.synthesis else {
            return Ok(SynthesisParams {
                seed,
                max_frequency: Some(DEFAULT_MAX_FREQUENCY.min(0.45 * d.sample_rate)),
                ..d
            });
        };
        let opt = |q: &Option<Qty>, dim, key: &str, default: f64| -> Result<f64, CliError> {
            q.as_ref().map_or(Ok(default), |q| q.with_unit(dim, key))
        };
        let sample_rate = opt(
            &s.sample_rate,
            Dimension::Frequency,
            "synthesis.sample_rate",
            d.sample_rate,
        )?;
        let params = SynthesisParams {
            distance: opt(
                &s.distance,
                Dimension::Length,
                "synthesis.distance",
                d.distance,
            )?,
            pulse_fwhm: opt(
                &s.pulse_fwhm,
                Dimension::Time,
                "synthesis.pulse_fwhm",
                d.pulse_fwhm,
            )?,
            sample_rate,
            duration: s
                .duration
                .as_ref()
                .map(|q| q.with_unit(Dimension::Time, "synthesis.duration"))
                .transpose()?,
            noise_rms: s.noise_rms.unwrap_or(0.0),
            seed,
            max_frequency: Some(opt(
                &s.max_frequency,
                Dimension::Frequency,
                "synthesis.max_frequency",
                DEFAULT_MAX_FREQUENCY.min(0.45 * sample_rate),
            )?),
        };
        if params.noise_rms > 0.0 && params.seed.is_none() {
            return Err(CliError::config(
                "synthesis.noise_rms > 0 requires a seed (config `seed` or --seed)",
            ));
        }
        Ok(params)
    }

    pub fn extraction(&self) -> Result<Extraction, CliError> {
        let mut ex = Extraction::default();
        if let Some(e) = &self.raw.extraction {
            if let Some(w) = &e.window {
                ex.window = w.parse()?;
            }
            if let Some(z) = e.zero_pad {
                ex.zero_pad = z;
            }
            if let Some(n) = e.n_harmonics {
                ex.n_harmonics = n;
            }
            if let Some(p) = e.min_prominence {
                ex.min_prominence = p;
            }
            if let Some(f) = &e.fundamental {
                ex.fundamental = Some(f.with_unit(Dimension::Frequency, "extraction.fundamental")?);
            }
        }
        Ok(ex)
    }

    pub fn calibration(&self) -> Result<(Option<f64>, f64), CliError> {
        let c = self.raw.calibration.as_ref();
        let pitch = c
            .and_then(|c| c.pixel_pitch.as_ref())
            .map(|q| q.with_unit(Dimension::Length, "calibration.pixel_pitch"))
            .transpose()?;
        let v = c
            .and_then(|c| c.v_reference.as_ref())
            .map(|q| q.with_unit(Dimension::Velocity, "calibration.v_reference"))
            .transpose()?
            .unwrap_or(5080.0);
        Ok((pitch, v))
    }

    pub fn fit(&self, template: &StackTemplate) -> Result<(Vec<FreeParam>, FitOptions), CliError> {
        let f = self
            .raw
            .fit
            .as_ref()
            .ok_or_else(|| CliError::config("config has no [fit] section"))?;
        let mut opts = FitOptions::default();
        if let Some(n) = f.max_iterations {
            opts.max_iterations = n;
        }
        if let Some(s) = f.sensitivity_threshold {
            opts.sensitivity_threshold = s;
        }
        if let Some(c) = f.condition_threshold {
            opts.condition_threshold = c;
        }
        if let Some(s) = &f.default_sigma {
            opts.default_sigma = Some(s.with_unit(Dimension::Velocity, "fit.default_sigma")?);
        }
        if f.params.is_empty() {
            return Err(CliError::config("fit.params is empty"));
        }
        let mut params = Vec::new();
        for p in &f.params {
            let target = template.target(&p.name)?;
            let q = target.quantity;
            let initial = p.initial.for_quantity(q, &format!("{}.initial", p.name))?;
            let (lower, upper) = if p.fixed {
                (initial, initial)
            } else {
                let lo = p
                    .lower
                    .as_ref()
                    .ok_or_else(|| CliError::config(format!("{}: lower bound required", p.name)))?
                    .for_quantity(q, &format!("{}.lower", p.name))?;
                let hi = p
                    .upper
                    .as_ref()
                    .ok_or_else(|| CliError::config(format!("{}: upper bound required", p.name)))?
                    .for_quantity(q, &format!("{}.upper", p.name))?;
                (lo, hi)
            };
            let transform: Transform = match &p.transform {
                Some(t) => t.parse()?,
                None => Transform::Linear,
            };
            params.push(FreeParam {
                name: p.name.clone(),
                initial,
                lower,
                upper,
                transform,
            });
        }
        Ok((params, opts))
    }
}

/// Mask period counts follow a 9.6 mm wide pattern.
pub fn default_periods(period: f64) -> usize {
    ((9.6e-3 / period).round() as usize).max(2)
}

#[derive(Debug, Clone, Copy)]
pub struct Extraction {
    pub window: Window,
    pub zero_pad: usize,
    pub n_harmonics: usize,
    pub min_prominence: f64,
    pub fundamental: Option<f64>,
}

impl Default for Extraction {
    fn default() -> Self {
        Self {
            window: Window::Hann,
            zero_pad: 4,
            n_harmonics: 12,
            min_prominence: 0.05,
            fundamental: None,
        }
    }
}
