//! Parsing of unit-suffixed quantities such as `"69.8 GPa"` or `"2.435 um"`.
//!
//! Every physical quantity in material databases and run configurations is
//! written with an explicit unit. Values are converted to SI on parse.

use std::fmt;

use thiserror::Error;

/// Physical dimension expected by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Pressure,
    Density,
    Length,
    Frequency,
    Time,
    Velocity,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Pressure => "pressure",
            Dimension::Density => "density",
            Dimension::Length => "length",
            Dimension::Frequency => "frequency",
            Dimension::Time => "time",
            Dimension::Velocity => "velocity",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("quantity `{0}` has no numeric value")]
    MissingNumber(String),
    #[error("quantity `{0}` has no unit suffix (expected a {1})")]
    MissingUnit(String, Dimension),
    #[error("unknown {1} unit `{0}`")]
    UnknownUnit(String, Dimension),
}

fn scale(unit: &str, dim: Dimension) -> Option<f64> {
    let s = match (dim, unit) {
        (Dimension::Pressure, "Pa") => 1.0,
        (Dimension::Pressure, "kPa") => 1e3,
        (Dimension::Pressure, "MPa") => 1e6,
        (Dimension::Pressure, "GPa") => 1e9,
        (Dimension::Density, "kg/m3" | "kg/m^3" | "kg/m³") => 1.0,
        (Dimension::Density, "g/cm3" | "g/cm^3" | "g/cm³") => 1e3,
        (Dimension::Length, "m") => 1.0,
        (Dimension::Length, "mm") => 1e-3,
        (Dimension::Length, "um" | "µm" | "μm") => 1e-6,
        (Dimension::Length, "nm") => 1e-9,
        (Dimension::Frequency, "Hz") => 1.0,
        (Dimension::Frequency, "kHz") => 1e3,
        (Dimension::Frequency, "MHz") => 1e6,
        (Dimension::Frequency, "GHz") => 1e9,
        (Dimension::Time, "s") => 1.0,
        (Dimension::Time, "ms") => 1e-3,
        (Dimension::Time, "us" | "µs" | "μs") => 1e-6,
        (Dimension::Time, "ns") => 1e-9,
        (Dimension::Velocity, "m/s") => 1.0,
        (Dimension::Velocity, "km/s") => 1e3,
        _ => return None,
    };
    Some(s)
}

/// Parses `"<number> <unit>"` (whitespace optional) into SI units.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, UnitError> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && text[i + 1..]
                        .chars()
                        .next()
                        .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| UnitError::MissingNumber(text.to_string()))?;
    let unit = unit.trim();
    if unit.is_empty() {
        return Err(UnitError::MissingUnit(text.to_string(), dim));
    }
    let factor = scale(unit, dim).ok_or_else(|| UnitError::UnknownUnit(unit.to_string(), dim))?;
    Ok(value * factor)
}
