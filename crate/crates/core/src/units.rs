//! Quantity strings such as `2pi*100MHz`, `6.3G`, `50um` or `-2pi*625.6 GHz*um^6`.
//!
//! Every quantity is converted to the crate's internal units: rad/s for
//! (angular) frequencies, um for lengths, seconds for time, gauss for the
//! magnetic field, cm^-3 for densities and rad/s*um^6 for the dispersion
//! coefficient.
//!
//! Frequency units of the Hz family are cyclic. For a key whose kind is
//! [`Kind::AngularFrequency`] (or [`Kind::DispersionCoefficient`]) the factor
//! 2pi between cycles and radians is applied exactly once: `6.06 MHz` and
//! `2pi*6.06 MHz` both mean 2pi x 6.06e6 rad/s. The `2pi*` prefix is an
//! explicit marker and is never applied twice. Values in `rad/s` units, or
//! bare numbers, are taken literally (a `2pi*` prefix then multiplies them).

use std::f64::consts::PI;
use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};

/// Physical dimension of a configuration key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    AngularFrequency,
    Length,
    MagneticField,
    Density,
    DispersionCoefficient,
    Time,
    Dimensionless,
}

impl Kind {
    fn internal_unit(self) -> &'static str {
        match self {
            Kind::AngularFrequency => "rad/s",
            Kind::Length => "um",
            Kind::MagneticField => "G",
            Kind::Density => "cm^-3",
            Kind::DispersionCoefficient => "rad/s*um^6",
            Kind::Time => "s",
            Kind::Dimensionless => "",
        }
    }
}

fn quantity_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?x)^\s*
            (?P<sign>[+-])?\s*
            (?:(?P<twopi>2\s*\*?\s*(?:pi|π))\s*[*×x]?\s*)?
            (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
            \s*(?P<unit>.*?)\s*$",
        )
        .expect("quantity regex")
    })
}

enum Scale {
    /// Cyclic frequency unit; carries the 2pi for angular keys.
    Cyclic(f64),
    Literal(f64),
}

fn unit_scale(kind: Kind, unit: &str) -> Option<Scale> {
    let unit: String = unit.chars().filter(|c| !c.is_whitespace()).collect();
    let unit = unit.replace(['µ', 'μ'], "u").replace('·', "*");
    use Scale::*;
    let scale = match kind {
        Kind::AngularFrequency => match unit.as_str() {
            "" | "rad/s" => Literal(1.0),
            "krad/s" => Literal(1e3),
            "Mrad/s" => Literal(1e6),
            "Grad/s" => Literal(1e9),
            "Hz" => Cyclic(1.0),
            "kHz" => Cyclic(1e3),
            "MHz" => Cyclic(1e6),
            "GHz" => Cyclic(1e9),
            _ => return None,
        },
        Kind::DispersionCoefficient => {
            let (freq, len) = match unit.split_once('*') {
                Some((f, l)) => (f, l),
                None if unit.is_empty() => ("", "um^6"),
                None => return None,
            };
            let len_scale = match len {
                "um^6" => 1.0,
                "nm^6" => 1e-18,
                _ => return None,
            };
            match freq {
                "" | "rad/s" => Literal(len_scale),
                "Hz" => Cyclic(len_scale),
                "kHz" => Cyclic(1e3 * len_scale),
                "MHz" => Cyclic(1e6 * len_scale),
                "GHz" => Cyclic(1e9 * len_scale),
                _ => return None,
            }
        }
        Kind::Length => Literal(match unit.as_str() {
            "" | "um" => 1.0,
            "nm" => 1e-3,
            "mm" => 1e3,
            "cm" => 1e4,
            "m" => 1e6,
            _ => return None,
        }),
        Kind::MagneticField => Literal(match unit.as_str() {
            "" | "G" => 1.0,
            "mG" => 1e-3,
            "T" => 1e4,
            "mT" => 10.0,
            _ => return None,
        }),
        Kind::Density => Literal(match unit.as_str() {
            "" | "cm^-3" | "/cm^3" | "cm-3" => 1.0,
            "m^-3" | "/m^3" | "m-3" => 1e-6,
            _ => return None,
        }),
        Kind::Time => Literal(match unit.as_str() {
            "" | "s" => 1.0,
            "ms" => 1e-3,
            "us" => 1e-6,
            "ns" => 1e-9,
            "ps" => 1e-12,
            _ => return None,
        }),
        Kind::Dimensionless => Literal(match unit.as_str() {
            "" => 1.0,
            _ => return None,
        }),
    };
    Some(scale)
}

/// Parses a quantity string into internal units for the given kind.
pub fn parse_quantity(input: &str, kind: Kind) -> Result<f64> {
    let err = |reason: String| Error::Quantity {
        input: input.to_string(),
        reason,
    };
    let caps = quantity_regex()
        .captures(input)
        .ok_or_else(|| err("expected [sign][2pi*]number[unit]".into()))?;
    let number: f64 = caps["num"]
        .parse()
        .map_err(|e| err(format!("bad number: {e}")))?;
    let negative = caps.name("sign").is_some_and(|s| s.as_str() == "-");
    let explicit_two_pi = caps.name("twopi").is_some();
    let unit = caps.name("unit").map_or("", |m| m.as_str());

    let scale = unit_scale(kind, unit).ok_or_else(|| {
        err(format!(
            "unit `{unit}` is not valid here (internal unit {})",
            kind.internal_unit()
        ))
    })?;
    let magnitude = match scale {
        Scale::Cyclic(s) => 2.0 * PI * number * s,
        Scale::Literal(s) => {
            if explicit_two_pi && !matches!(kind, Kind::AngularFrequency | Kind::DispersionCoefficient)
            {
                return Err(err("a 2pi factor only makes sense for frequencies".into()));
            }
            let two_pi = if explicit_two_pi { 2.0 * PI } else { 1.0 };
            two_pi * number * s
        }
    };
    let value = if negative { -magnitude } else { magnitude };
    if !value.is_finite() {
        return Err(err("value is not finite".into()));
    }
    Ok(value)
}

/// A `lo:hi:n` scan with `n` inclusive, evenly spaced points.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl ScanRange {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.n)
    }
}

/// Parses `lo:hi:n`; both ends are quantity strings of `kind`.
pub fn parse_scan(input: &str, kind: Kind) -> Result<ScanRange> {
    let parts: Vec<&str> = input.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Quantity {
            input: input.into(),
            reason: "scan must look like lo:hi:n".into(),
        });
    }
    let lo = parse_quantity(parts[0], kind)?;
    let hi = parse_quantity(parts[1], kind)?;
    let n: usize = parts[2].trim().parse().map_err(|_| Error::Quantity {
        input: input.into(),
        reason: format!("bad point count `{}`", parts[2]),
    })?;
    if n < 2 {
        return Err(Error::Quantity {
            input: input.into(),
            reason: "a scan needs at least 2 points".into(),
        });
    }
    Ok(ScanRange { lo, hi, n })
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}
