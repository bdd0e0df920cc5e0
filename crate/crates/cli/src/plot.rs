//! Minimal SVG rendering of dispersion curves.

use std::fmt::Write as _;

pub struct Series {
    pub label: String,
    /// (frequency Hz, velocity m/s, sigma m/s)
    pub points: Vec<(f64, f64, Option<f64>)>,
    /// Markers with error bars when true, a polyline otherwise.
    pub measured: bool,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];
const DASHES: [&str; 4] = ["none", "6 3", "2 3", "8 3 2 3"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Range padded by 5% of its span on each side.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    let pad = if span > 0.0 {
        0.05 * span
    } else {
        0.05 * lo.abs().max(1.0)
    };
    (lo - pad, hi + pad)
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 6);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn marker(out: &mut String, shape: usize, x: f64, y: f64, color: &str) {
    let r = 4.0;
    let _ = match shape % 4 {
        0 => writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{color}"/>"#
        ),
        1 => writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{}" height="{}" fill="{color}"/>"#,
            x - r,
            y - r,
            2.0 * r,
            2.0 * r
        ),
        2 => writeln!(
            out,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}"/>"#,
            x,
            y - r,
            x - r,
            y + r,
            x + r,
            y + r
        ),
        _ => writeln!(
            out,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            x,
            y - r,
            x + r,
            y,
            x,
            y + r,
            x - r,
            y
        ),
    };
}

pub fn render_svg(series: &[Series], title: Option<&str>) -> String {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut fx0, mut fx1, mut vy0, mut vy1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(f, v, s) in all {
        let s = s.unwrap_or(0.0);
        fx0 = fx0.min(f * 1e-6);
        fx1 = fx1.max(f * 1e-6);
        vy0 = vy0.min(v - s);
        vy1 = vy1.max(v + s);
    }
    if !fx0.is_finite() {
        (fx0, fx1, vy0, vy1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = padded(fx0, fx1);
    let (y0, y1) = padded(vy0, vy1);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |f_mhz: f64| LEFT + (f_mhz - x0) / (x1 - x0) * pw;
    let sy = |v: f64| TOP + (y1 - v) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(t) = title {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(out, r##"<g class="ticks" stroke="#ccc">"##);
    for t in ticks(x0, x1) {
        let _ = writeln!(
            out,
            r#"<line x1="{0:.2}" y1="{TOP}" x2="{0:.2}" y2="{1}"/>"#,
            sx(t),
            TOP + ph
        );
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(
            out,
            r#"<line x1="{LEFT}" y1="{0:.2}" x2="{1}" y2="{0:.2}"/>"#,
            sy(t),
            LEFT + pw
        );
    }
    let _ = writeln!(out, "</g>");
    for t in ticks(x0, x1) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(t),
            TOP + ph + 18.0,
            t
        );
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            LEFT - 6.0,
            sy(t),
            t
        );
    }
    let _ = writeln!(
        out,
        r#"<text class="xlabel" x="{:.1}" y="{:.1}" text-anchor="middle">Frequency (MHz)</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        out,
        r#"<text class="ylabel" x="20" y="{0:.1}" text-anchor="middle" transform="rotate(-90 20 {0:.1})">Phase velocity (m/s)</text>"#,
        TOP + ph / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(out, r#"<g class="series" id="series-{i}">"#);
        if s.measured {
            for &(f, v, sig) in &s.points {
                let (x, y) = (sx(f * 1e-6), sy(v));
                if let Some(sig) = sig {
                    let _ = writeln!(
                        out,
                        r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}"/>"#,
                        sy(v - sig),
                        sy(v + sig)
                    );
                }
                marker(&mut out, i, x, y, color);
            }
        } else {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(f, v, _)| format!("{:.2},{:.2}", sx(f * 1e-6), sy(v)))
                .collect();
            let dash = DASHES[i % DASHES.len()];
            let dash_attr = if dash == "none" {
                String::new()
            } else {
                format!(r#" stroke-dasharray="{dash}""#)
            };
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash_attr}/>"#,
                pts.join(" ")
            );
        }
        let ly = TOP + 14.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 14.0;
        if s.measured {
            marker(&mut out, i, lx + 10.0, ly, color);
        } else {
            let _ = writeln!(
                out,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
                lx + 20.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}" dominant-baseline="middle">{}</text>"#,
            lx + 26.0,
            escape(&s.label)
        );
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}
