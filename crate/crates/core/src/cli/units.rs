//! Unit-suffixed scalars such as `"4 ms"`, `"20 dB"` or `"6 MHz"`.

use serde::{Deserialize, Serialize};

use super::CliError;

/// A config value as written: a bare number or a string with a unit suffix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

/// Physical dimension expected by a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Seconds: `s`, `ms`, `us`.
    Time,
    /// Hertz: `Hz`, `kHz`, `MHz`, `GHz`.
    Frequency,
    /// Power ratio: `dB` or `linear`.
    Ratio,
    /// Power in the detector's normalized units: `W`, `mW`, `dBW`, `dBm`, `linear`.
    Power,
    /// Metres: `m`, `km`.
    Distance,
    /// Events per second: `/s`, `1/s`.
    Rate,
    /// Pure number; bare values allowed, `linear` accepted.
    Dimensionless,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Time => "a duration (s, ms, us)",
            Kind::Frequency => "a frequency (Hz, kHz, MHz, GHz)",
            Kind::Ratio => "a ratio (dB or linear)",
            Kind::Power => "a power (W, mW, dBW, dBm or linear)",
            Kind::Distance => "a distance (m, km)",
            Kind::Rate => "a rate (/s)",
            Kind::Dimensionless => "a number",
        }
    }

    /// SI unit used when echoing resolved values.
    pub fn base_unit(self) -> &'static str {
        match self {
            Kind::Time => "s",
            Kind::Frequency => "Hz",
            Kind::Ratio => "linear",
            Kind::Power => "W",
            Kind::Distance => "m",
            Kind::Rate => "/s",
            Kind::Dimensionless => "",
        }
    }
}

fn split(text: &str) -> Option<(f64, &str)> {
    let text = text.trim();
    let end = text
        .char_indices()
        .find(|&(i, c)| !(c.is_ascii_digit() || c == '.' || c == '+' || c == '-' || ((c == 'e' || c == 'E') && i > 0)))
        .map_or(text.len(), |(i, _)| i);
    let value = text[..end].parse::<f64>().ok()?;
    Some((value, text[end..].trim()))
}

fn convert(value: f64, unit: &str, kind: Kind) -> Option<f64> {
    let db = |v: f64| 10f64.powf(v / 10.0);
    let v = match (kind, unit) {
        (Kind::Time, "s") => value,
        (Kind::Time, "ms") => value * 1e-3,
        (Kind::Time, "us") => value * 1e-6,
        (Kind::Frequency, "Hz") => value,
        (Kind::Frequency, "kHz") => value * 1e3,
        (Kind::Frequency, "MHz") => value * 1e6,
        (Kind::Frequency, "GHz") => value * 1e9,
        (Kind::Ratio, "dB") => db(value),
        (Kind::Ratio | Kind::Power | Kind::Dimensionless, "linear") => value,
        (Kind::Power, "W") => value,
        (Kind::Power, "mW") => value * 1e-3,
        (Kind::Power, "dBW") => db(value),
        (Kind::Power, "dBm") => db(value - 30.0),
        (Kind::Distance, "m") => value,
        (Kind::Distance, "km") => value * 1e3,
        (Kind::Rate, "/s" | "1/s") => value,
        (Kind::Dimensionless, "") => value,
        _ => return None,
    };
    Some(v)
}

/// Resolve `raw` to a finite value in the base unit of `kind`; `field` names the key in errors.
pub fn resolve(field: &str, raw: &Scalar, kind: Kind) -> Result<f64, CliError> {
    let bad = |what: String| CliError::Schema(format!("{field}: expected {}, got {what}", kind.name()));
    let value = match raw {
        Scalar::Number(v) if kind == Kind::Dimensionless => *v,
        Scalar::Number(v) => return Err(bad(format!("the bare number {v} (a unit suffix is required)"))),
        Scalar::Text(t) => {
            let (v, unit) = split(t).ok_or_else(|| bad(format!("'{t}'")))?;
            convert(v, unit, kind).ok_or_else(|| bad(format!("'{t}'")))?
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad("a non-finite value".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(s: &str) -> Scalar {
        Scalar::Text(s.into())
    }

    #[test]
    fn suffixes() {
        assert_eq!(resolve("x", &text("4 ms"), Kind::Time).unwrap(), 4e-3);
        assert_eq!(resolve("x", &text("6MHz"), Kind::Frequency).unwrap(), 6e6);
        assert!((resolve("x", &text("20 dB"), Kind::Ratio).unwrap() - 100.0).abs() < 1e-12);
        assert!((resolve("x", &text("-15 dB"), Kind::Ratio).unwrap() - 10f64.powf(-1.5)).abs() < 1e-15);
        assert_eq!(resolve("x", &text("0.01 /s"), Kind::Rate).unwrap(), 0.01);
        assert_eq!(resolve("x", &text("1e-3 s"), Kind::Time).unwrap(), 1e-3);
        assert!((resolve("x", &text("30 dBm"), Kind::Power).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(resolve("x", &Scalar::Number(0.2), Kind::Dimensionless).unwrap(), 0.2);
    }

    #[test]
    fn rejects_missing_or_wrong_units() {
        for (raw, kind) in [
            (Scalar::Number(4.0), Kind::Time),
            (text("4"), Kind::Time),
            (text("4 dB"), Kind::Time),
            (text("4 msec"), Kind::Time),
            (text("ms"), Kind::Time),
            (text("20 db"), Kind::Ratio),
        ] {
            let e = resolve("frame.t_s0", &raw, kind).unwrap_err();
            assert!(matches!(e, CliError::Schema(ref m) if m.starts_with("frame.t_s0")), "{e:?}");
        }
    }
}
