//! Unit-suffixed quantities for human-edited config files.
//!
//! Every dimensioned value is written as `"<number> <unit>"`, e.g.
//! `"46.507 rad/us"`, `"7.52 MHz"`, `"450 ns"`, `"5 deg"`. The number may be
//! `pi`, `2pi`, `-0.5pi` and so on. Internal units are rad/µs for angular
//! frequencies, 1/µs for rates, µs for times and radians for angles.
//!
//! Note that `MHz` means a *cyclic* frequency for angular-frequency fields
//! (multiplied by 2π) but a plain rate for decay-rate fields (1 MHz = 1/µs).

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    AngularFrequency,
    Rate,
    Time,
    Angle,
}

impl Dimension {
    fn name(self) -> &'static str {
        match self {
            Dimension::AngularFrequency => "angular frequency",
            Dimension::Rate => "rate",
            Dimension::Time => "time",
            Dimension::Angle => "angle",
        }
    }

    fn factor(self, unit: &str) -> Option<f64> {
        let f = match (self, unit) {
            (Dimension::AngularFrequency, "rad/us" | "Mrad/s") => 1.0,
            (Dimension::AngularFrequency, "krad/us" | "Grad/s") => 1e3,
            (Dimension::AngularFrequency, "MHz") => TAU,
            (Dimension::AngularFrequency, "kHz") => TAU * 1e-3,
            (Dimension::AngularFrequency, "GHz") => TAU * 1e3,
            (Dimension::Rate, "1/us" | "/us" | "MHz") => 1.0,
            (Dimension::Rate, "kHz" | "1/ms" | "/ms") => 1e-3,
            (Dimension::Rate, "1/ns" | "/ns" | "GHz") => 1e3,
            (Dimension::Time, "us") => 1.0,
            (Dimension::Time, "ns") => 1e-3,
            (Dimension::Time, "ms") => 1e3,
            (Dimension::Time, "s") => 1e6,
            (Dimension::Angle, "rad") => 1.0,
            (Dimension::Angle, "deg") => PI / 180.0,
            _ => return None,
        };
        Some(f)
    }

    fn canonical_unit(self) -> &'static str {
        match self {
            Dimension::AngularFrequency => "rad/us",
            Dimension::Rate => "1/us",
            Dimension::Time => "us",
            Dimension::Angle => "rad",
        }
    }
}

fn parse_number(s: &str) -> Option<f64> {
    if let Some(head) = s.strip_suffix("pi") {
        let mult = match head {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => h.trim_end_matches('*').parse::<f64>().ok()?,
        };
        return Some(mult * PI);
    }
    s.parse::<f64>().ok()
}

/// Parses `"<number> <unit>"` (whitespace optional) into internal units.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let t = text.trim();
    let split = t
        .find(|ch: char| ch.is_whitespace())
        .map(|i| (t[..i].trim(), t[i..].trim()))
        .or_else(|| {
            // "0.5us", "450ns": split where the unit starts
            let idx = t
                .char_indices()
                .find(|&(i, ch)| {
                    ch.is_ascii_alphabetic() && !t[i..].starts_with("pi") && !t[i..].starts_with('e')
                        || ch == '/'
                })
                .map(|(i, _)| i)?;
            Some((&t[..idx], &t[idx..]))
        });
    let (num, unit) = split.ok_or_else(|| {
        Error::Config(format!(
            "`{text}`: expected a {} with a unit suffix (e.g. `1 {}`)",
            dim.name(),
            dim.canonical_unit()
        ))
    })?;
    let value = parse_number(num)
        .ok_or_else(|| Error::Config(format!("`{text}`: cannot parse number `{num}`")))?;
    let factor = dim.factor(unit).ok_or_else(|| {
        Error::Config(format!("`{text}`: unit `{unit}` is not a valid {} unit", dim.name()))
    })?;
    if !value.is_finite() {
        return Err(Error::Config(format!("`{text}`: value must be finite")));
    }
    Ok(value * factor)
}

macro_rules! quantity {
    ($(#[$doc:meta])* $name:ident, $dim:expr) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
        pub struct $name(pub f64);

        impl $name {
            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl std::str::FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                parse_quantity(s, $dim).map($name)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} {}", self.0, $dim.canonical_unit())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_string())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                struct V;
                impl<'de> Visitor<'de> for V {
                    type Value = $name;
                    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                        write!(f, "a {} string with unit suffix", $dim.name())
                    }
                    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<$name, E> {
                        v.parse().map_err(|e: Error| E::custom(e))
                    }
                    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<$name, E> {
                        Err(E::custom(format!(
                            "bare number {v}: {} values need an explicit unit suffix",
                            $dim.name()
                        )))
                    }
                    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<$name, E> {
                        self.visit_f64(v as f64)
                    }
                    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<$name, E> {
                        self.visit_f64(v as f64)
                    }
                }
                d.deserialize_any(V)
            }
        }
    };
}

quantity!(
    /// Angular frequency in rad/µs.
    AngularFrequency,
    Dimension::AngularFrequency
);
quantity!(
    /// Exponential rate in 1/µs.
    Rate,
    Dimension::Rate
);
quantity!(
    /// Duration in µs.
    Time,
    Dimension::Time
);
quantity!(
    /// Angle in radians.
    Angle,
    Dimension::Angle
);

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parses_suffixes() {
        assert_abs_diff_eq!(parse_quantity("46.507 rad/us", Dimension::AngularFrequency).unwrap(), 46.507);
        assert_abs_diff_eq!(parse_quantity("7.52 MHz", Dimension::AngularFrequency).unwrap(), TAU * 7.52);
        assert_abs_diff_eq!(parse_quantity("35.114 MHz", Dimension::Rate).unwrap(), 35.114);
        assert_abs_diff_eq!(parse_quantity("450 ns", Dimension::Time).unwrap(), 0.45, epsilon = 1e-15);
        assert_abs_diff_eq!(parse_quantity("0.5us", Dimension::Time).unwrap(), 0.5);
        assert_abs_diff_eq!(parse_quantity("893us", Dimension::Time).unwrap(), 893.0);
        assert_abs_diff_eq!(parse_quantity("1e-3 s", Dimension::Time).unwrap(), 1e3);
        assert_abs_diff_eq!(parse_quantity("5 deg", Dimension::Angle).unwrap(), 5f64.to_radians());
        assert_abs_diff_eq!(parse_quantity("pi rad", Dimension::Angle).unwrap(), PI);
        assert_abs_diff_eq!(parse_quantity("-0.5pi rad", Dimension::Angle).unwrap(), -0.5 * PI);
    }

    #[test]
    fn rejects_wrong_or_missing_units() {
        assert!(parse_quantity("12", Dimension::Time).is_err());
        assert!(parse_quantity("12 rad", Dimension::Time).is_err());
        assert!(parse_quantity("abc us", Dimension::Time).is_err());
    }

    #[test]
    fn deserializes_from_toml() {
        #[derive(Deserialize)]
        struct T {
            t: Time,
        }
        let ok: T = toml::from_str("t = \"250 ns\"").unwrap();
        assert_abs_diff_eq!(ok.t.0, 0.25);
        assert!(toml::from_str::<T>("t = 0.25").is_err());
    }
}
