//! Exact rational arithmetic helpers.
//!
//! Money, utilities and prices are carried as `Ratio<i128>` so that totals
//! never drift. Values enter the system as decimal text ("0.15", "11.6") or
//! JSON numbers and leave it as decimal strings when they have a finite
//! decimal expansion.

use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serializer};

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a decimal number: {0:?}")]
pub struct ParseRationalError(pub String);

/// Parses `"12"`, `"-0.15"`, `"3/4"` or `"1e-3"` into an exact rational.
pub fn parse_decimal(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| err())?;
        let d: i128 = d.trim().parse().map_err(|_| err())?;
        if d == 0 {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all: String = format!("{int_part}{frac_part}");
    let numer: i128 = if all.is_empty() { 0 } else { all.parse().map_err(|_| err())? };
    let scale = exponent - frac_part.len() as i32;
    let value = if scale >= 0 {
        let factor = 10i128.checked_pow(scale as u32).ok_or_else(err)?;
        Rational::from_integer(numer.checked_mul(factor).ok_or_else(err)?)
    } else {
        let factor = 10i128.checked_pow((-scale) as u32).ok_or_else(err)?;
        Rational::new(numer, factor)
    };
    Ok(if negative { -value } else { value })
}

/// Converts a float through its shortest round-trip decimal representation.
pub fn from_f64(value: f64) -> Option<Rational> {
    if !value.is_finite() {
        return None;
    }
    parse_decimal(&format!("{value}")).ok()
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Renders with exactly `places` digits after the point, rounding half away from zero.
pub fn format_fixed(value: &Rational, places: u32) -> String {
    let scale = 10i128.pow(places);
    let scaled = value * Rational::from_integer(scale);
    let rounded = scaled.abs().round().to_integer();
    let sign = if value.is_negative() && rounded != 0 { "-" } else { "" };
    let int = rounded / scale;
    if places == 0 {
        return format!("{sign}{int}");
    }
    let frac = rounded % scale;
    format!("{sign}{int}.{frac:0width$}", width = places as usize)
}

/// Exact decimal text when the denominator has only factors 2 and 5, else `n/d`.
pub fn to_decimal_string(value: &Rational) -> String {
    let mut d = *value.denom();
    let mut places = 0u32;
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return format!("{}/{}", value.numer(), value.denom());
    }
    places += twos.max(fives);
    if places == 0 {
        return value.to_integer().to_string();
    }
    format_fixed(value, places)
}

pub struct DecimalDisplay<'a>(pub &'a Rational);

impl fmt::Display for DecimalDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_decimal_string(self.0))
    }
}

pub fn is_zero(value: &Rational) -> bool {
    value.is_zero()
}

/// Serde adapter: writes decimal strings, reads strings or JSON numbers.
pub mod serde_decimal {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_decimal_string(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = serde_json::Value::deserialize(d)?;
        from_json(&raw).map_err(de::Error::custom)
    }

    pub fn from_json(raw: &serde_json::Value) -> Result<Rational, String> {
        match raw {
            serde_json::Value::String(s) => parse_decimal(s).map_err(|e| e.to_string()),
            serde_json::Value::Number(n) => {
                // serde_json prints integers exactly and floats in shortest round-trip form
                parse_decimal(&n.to_string()).map_err(|e| e.to_string())
            }
            other => Err(format!("expected a number, found {other}")),
        }
    }
}

/// Like [`serde_decimal`] for optional values; `None` is JSON `null`.
pub mod serde_decimal_opt {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => s.serialize_some(&to_decimal_string(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Null => Ok(None),
            raw => serde_decimal::from_json(&raw).map(Some).map_err(de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_decimal("0.15").unwrap(), r(3, 20));
        assert_eq!(parse_decimal("15.00").unwrap(), r(15, 1));
        assert_eq!(parse_decimal("-2.5").unwrap(), r(-5, 2));
        assert_eq!(parse_decimal("3/4").unwrap(), r(3, 4));
        assert_eq!(parse_decimal("1e-3").unwrap(), r(1, 1000));
        assert_eq!(parse_decimal("2E2").unwrap(), r(200, 1));
        assert_eq!(parse_decimal(".5").unwrap(), r(1, 2));
        assert!(parse_decimal("").is_err());
        assert!(parse_decimal("abc").is_err());
        assert!(parse_decimal("1/0").is_err());
        assert!(parse_decimal("-").is_err());
    }

    #[test]
    fn float_conversion_uses_shortest_repr() {
        assert_eq!(from_f64(11.6).unwrap(), r(58, 5));
        assert_eq!(from_f64(0.1).unwrap(), r(1, 10));
        assert!(from_f64(f64::INFINITY).is_none());
    }

    #[test]
    fn formatting() {
        assert_eq!(format_fixed(&r(3, 4), 2), "0.75");
        assert_eq!(format_fixed(&r(7, 10), 2), "0.70");
        assert_eq!(format_fixed(&r(2, 3), 2), "0.67");
        assert_eq!(format_fixed(&r(-1, 8), 2), "-0.13");
        assert_eq!(to_decimal_string(&r(6, 5)), "1.2");
        assert_eq!(to_decimal_string(&r(3, 20)), "0.15");
        assert_eq!(to_decimal_string(&r(5, 1)), "5");
        assert_eq!(to_decimal_string(&r(1, 3)), "1/3");
    }

    #[test]
    fn decimal_string_round_trips() {
        for (n, d) in [(1, 3), (3, 20), (-7, 8), (0, 1), (123456789, 1000)] {
            let v = r(n, d);
            assert_eq!(parse_decimal(&to_decimal_string(&v)).unwrap(), v);
        }
    }
}
