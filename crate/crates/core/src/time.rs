//! Fixed-point time units.
//!
//! All time quantities, durations included, are decimal time units
//! stored as integer millionths, so arithmetic on them never goes through
//! floating point.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const SCALE: i64 = 1_000_000;

/// A non-negative amount of time (or an instant measured from zero).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Time(i64);

impl Time {
    pub const ZERO: Time = Time(0);

    pub fn from_units(units: i64) -> Time {
        Time(units * SCALE)
    }

    pub fn from_micros(micros: i64) -> Time {
        Time(micros)
    }

    pub fn as_micros(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Multiplies by `num / den`, returning `None` unless the result is
    /// representable exactly.
    pub fn scale(self, num: i64, den: i64) -> Option<Time> {
        if den <= 0 || num < 0 {
            return None;
        }
        let product = (self.0 as i128) * (num as i128);
        if product % (den as i128) != 0 {
            return None;
        }
        i64::try_from(product / den as i128).ok().map(Time)
    }

    pub fn checked_sub(self, rhs: Time) -> Option<Time> {
        self.0.checked_sub(rhs.0).filter(|v| *v >= 0).map(Time)
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl AddAssign for Time {
    fn add_assign(&mut self, rhs: Time) {
        self.0 += rhs.0;
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl Sum for Time {
    fn sum<I: Iterator<Item = Time>>(iter: I) -> Time {
        iter.fold(Time::ZERO, Add::add)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / SCALE as u64;
        let frac = abs % SCALE as u64;
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseTimeError {
    #[error("time value `{0}` is not a decimal number")]
    Syntax(String),
    #[error("time value `{0}` has more than 6 decimal places")]
    Precision(String),
    #[error("time value `{0}` is negative")]
    Negative(String),
    #[error("time value `{0}` is out of range")]
    Range(String),
}

impl FromStr for Time {
    type Err = ParseTimeError;

    fn from_str(s: &str) -> Result<Time, ParseTimeError> {
        let text = s.trim();
        if text.starts_with('-') {
            return Err(ParseTimeError::Negative(s.to_owned()));
        }
        let (whole, frac) = match text.split_once('.') {
            Some((w, f)) => (w, f),
            None => (text, ""),
        };
        let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if whole.is_empty() && frac.is_empty() || !all_digits(whole) || !all_digits(frac) {
            return Err(ParseTimeError::Syntax(s.to_owned()));
        }
        if frac.len() > 6 {
            return Err(ParseTimeError::Precision(s.to_owned()));
        }
        let whole: i64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| ParseTimeError::Range(s.to_owned()))?
        };
        let frac_micros: i64 = if frac.is_empty() {
            0
        } else {
            format!("{frac:0<6}").parse().expect("six ascii digits")
        };
        whole
            .checked_mul(SCALE)
            .and_then(|w| w.checked_add(frac_micros))
            .map(Time)
            .ok_or_else(|| ParseTimeError::Range(s.to_owned()))
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0 % SCALE == 0 {
            serializer.serialize_i64(self.0 / SCALE)
        } else {
            serializer.serialize_f64(self.as_f64())
        }
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Time, D::Error> {
        struct TimeVisitor;

        impl Visitor<'_> for TimeVisitor {
            type Value = Time;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative decimal number of time units")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Time, E> {
                i64::try_from(v)
                    .ok()
                    .and_then(|v| v.checked_mul(SCALE))
                    .map(Time)
                    .ok_or_else(|| E::custom(format!("time value {v} is out of range")))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Time, E> {
                if v < 0 {
                    return Err(E::custom(ParseTimeError::Negative(v.to_string())));
                }
                self.visit_u64(v as u64)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Time, E> {
                // ryu prints the shortest round-tripping form, which is the
                // decimal the author wrote.
                let mut buf = ryu::Buffer::new();
                let text = buf.format(v);
                if text.contains('e') || text.contains("inf") || text.contains("NaN") {
                    return Err(E::custom(ParseTimeError::Syntax(text.to_owned())));
                }
                text.parse().map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Time, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(TimeVisitor)
    }
}
