use std::fmt::Write as _;

use super::{MaskKind, MaskSpec, SignalError, Spectrum, Waveform};

/// Serializes a waveform as `time_s,amplitude` rows behind `#` metadata lines.
pub fn write_waveform_csv(w: &Waveform) -> String {
    let mut out = String::with_capacity(w.samples.len() * 32);
    let _ = writeln!(out, "# sample_rate_hz={:e}", w.sample_rate);
    let _ = writeln!(out, "# distance_m={:e}", w.distance);
    if let Some(seed) = w.seed {
        let _ = writeln!(out, "# seed={seed}");
    }
    if let Some(m) = &w.mask {
        let _ = writeln!(out, "# mask_period_m={:e}", m.period);
        let _ = writeln!(out, "# mask_duty={}", m.duty);
        let _ = writeln!(out, "# mask_periods={}", m.n_periods);
        let kind = match m.kind {
            MaskKind::GlassMask => "glass",
            MaskKind::Slm => "slm",
        };
        let _ = writeln!(out, "# mask_kind={kind}");
    }
    out.push_str("time_s,amplitude\n");
    let dt = 1.0 / w.sample_rate;
    for (i, s) in w.samples.iter().enumerate() {
        let _ = writeln!(out, "{:e},{:e}", i as f64 * dt, s);
    }
    out
}

fn header_err(reason: &str) -> SignalError {
    SignalError::InvalidInput(format!("waveform file: {reason}"))
}

fn csv_err(line: usize, reason: impl Into<String>) -> SignalError {
    SignalError::Csv {
        line,
        reason: reason.into(),
    }
}

/// Parses the format written by [`write_waveform_csv`]. Samples are assumed
/// uniformly spaced at the declared rate.
pub fn read_waveform_csv(text: &str) -> Result<Waveform, SignalError> {
    let mut sample_rate = None;
    let mut distance = None;
    let mut seed = None;
    let (mut period, mut duty, mut periods, mut kind) = (None, None, None, MaskKind::GlassMask);
    let mut header_seen = false;
    let mut samples = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let Some((key, value)) = meta.split_once('=') else {
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| csv_err(line_no, format!("bad value for {key}")))
            };
            match key {
                "sample_rate_hz" => sample_rate = Some(num()?),
                "distance_m" => distance = Some(num()?),
                "seed" => {
                    seed = Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| csv_err(line_no, "bad seed"))?,
                    )
                }
                "mask_period_m" => period = Some(num()?),
                "mask_duty" => duty = Some(num()?),
                "mask_periods" => {
                    periods = Some(
                        value
                            .parse::<usize>()
                            .map_err(|_| csv_err(line_no, "bad mask_periods"))?,
                    )
                }
                "mask_kind" => {
                    kind = match value {
                        "glass" => MaskKind::GlassMask,
                        "slm" => MaskKind::Slm,
                        _ => return Err(csv_err(line_no, format!("unknown mask kind `{value}`"))),
                    }
                }
                _ => {}
            }
            continue;
        }
        if !header_seen {
            if line.replace(' ', "") != "time_s,amplitude" {
                return Err(csv_err(line_no, "expected header `time_s,amplitude`"));
            }
            header_seen = true;
            continue;
        }
        let mut cols = line.split(',');
        let (Some(_t), Some(a), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(csv_err(line_no, "expected two columns"));
        };
        let a: f64 = a
            .trim()
            .parse()
            .map_err(|_| csv_err(line_no, format!("not a number: `{}`", a.trim())))?;
        if !a.is_finite() {
            return Err(csv_err(line_no, "non-finite amplitude"));
        }
        samples.push(a);
    }
    let sample_rate = sample_rate.ok_or_else(|| header_err("missing `# sample_rate_hz=` line"))?;
    if !(sample_rate > 0.0) {
        return Err(header_err("sample rate must be positive"));
    }
    let distance = distance.ok_or_else(|| header_err("missing `# distance_m=` line"))?;
    if !header_seen {
        return Err(header_err("missing header `time_s,amplitude`"));
    }
    let mask = match (period, duty, periods) {
        (Some(p), Some(d), Some(n)) => Some(MaskSpec::new(p, d, n, kind)?),
        (Some(p), _, _) => Some(MaskSpec {
            period: p,
            duty: duty.unwrap_or(0.5),
            n_periods: periods.unwrap_or(0),
            kind,
        }),
        _ => None,
    };
    Ok(Waveform {
        samples,
        sample_rate,
        distance,
        seed,
        mask,
    })
}

pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("frequency_hz,amplitude\n");
    for (f, a) in s.bins() {
        let _ = writeln!(out, "{f:e},{a:e}");
    }
    out
}
