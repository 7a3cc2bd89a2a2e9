//! Exact power quantities in units of the per-pole rating `P`.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A power value (or any other exact quantity such as a length) held as a
/// reduced rational number.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Power(Ratio<i64>);

impl Power {
    pub const ZERO: Power = Power(Ratio::new_raw(0, 1));
    pub const ONE: Power = Power(Ratio::new_raw(1, 1));

    pub fn new(numer: i64, denom: i64) -> Self {
        Power(Ratio::new(numer, denom))
    }

    pub fn from_int(value: i64) -> Self {
        Power(Ratio::from_integer(value))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        Power(self.0.abs())
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Expresses the value as an integer count of `1/scale` units.
    ///
    /// Returns `None` when `scale` is not a multiple of the denominator.
    pub fn to_scaled(&self, scale: i64) -> Option<i64> {
        if scale % self.denom() != 0 {
            return None;
        }
        self.numer().checked_mul(scale / self.denom())
    }

    pub fn from_scaled(units: i64, scale: i64) -> Self {
        Power::new(units, scale)
    }

    /// Parses a decimal literal such as `-0.25` or `1e3` exactly.
    fn parse_decimal(text: &str) -> Option<Self> {
        let (mantissa, exponent) = match text.find(['e', 'E']) {
            Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
            None => (text, 0),
        };
        let (negative, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return None;
        }
        let joined = format!("{int_part}{frac_part}");
        let mut numer: i64 = joined.trim_start_matches('0').parse().unwrap_or(0);
        if joined.trim_start_matches('0').len() > 18 {
            return None;
        }
        let mut denom: i64 = 1;
        let shift = exponent - frac_part.len() as i32;
        if shift >= 0 {
            numer = numer.checked_mul(10i64.checked_pow(shift as u32)?)?;
        } else {
            denom = 10i64.checked_pow((-shift) as u32)?;
        }
        if negative {
            numer = -numer;
        }
        Some(Power::new(numer, denom))
    }
}

/// Least common multiple of the denominators of `values`.
pub fn common_scale<'a>(values: impl IntoIterator<Item = &'a Power>) -> Option<i64> {
    values.into_iter().try_fold(1i64, |acc, v| {
        let g = acc.gcd(&v.denom());
        (acc / g).checked_mul(v.denom())
    })
}

impl fmt::Display for Power {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Power {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}P")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not an exact power value: {0:?}")]
pub struct ParsePowerError(String);

impl FromStr for Power {
    type Err = ParsePowerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        let text = text.strip_suffix('P').unwrap_or(text).trim();
        if let Some((n, d)) = text.split_once('/') {
            let numer: i64 = n.trim().parse().map_err(|_| ParsePowerError(s.into()))?;
            let denom: i64 = d.trim().parse().map_err(|_| ParsePowerError(s.into()))?;
            if denom == 0 {
                return Err(ParsePowerError(s.into()));
            }
            return Ok(Power::new(numer, denom));
        }
        Power::parse_decimal(text).ok_or_else(|| ParsePowerError(s.into()))
    }
}

impl Serialize for Power {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Power {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PowerVisitor;

        impl Visitor<'_> for PowerVisitor {
            type Value = Power;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a rational string like \"5/3\"")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Power, E> {
                Ok(Power::from_int(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Power, E> {
                i64::try_from(v)
                    .map(Power::from_int)
                    .map_err(|_| E::custom("value out of range"))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Power, E> {
                // Shortest round-trip representation keeps 0.1 as 1/10.
                Power::parse_decimal(&format!("{v:?}"))
                    .ok_or_else(|| E::custom(format!("cannot represent {v} exactly")))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Power, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(PowerVisitor)
    }
}

impl Add for Power {
    type Output = Power;
    fn add(self, rhs: Power) -> Power {
        Power(self.0 + rhs.0)
    }
}

impl Sub for Power {
    type Output = Power;
    fn sub(self, rhs: Power) -> Power {
        Power(self.0 - rhs.0)
    }
}

impl Mul for Power {
    type Output = Power;
    fn mul(self, rhs: Power) -> Power {
        Power(self.0 * rhs.0)
    }
}

impl Div for Power {
    type Output = Power;
    fn div(self, rhs: Power) -> Power {
        Power(self.0 / rhs.0)
    }
}

impl Neg for Power {
    type Output = Power;
    fn neg(self) -> Power {
        Power(-self.0)
    }
}

impl AddAssign for Power {
    fn add_assign(&mut self, rhs: Power) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Power {
    fn sub_assign(&mut self, rhs: Power) {
        self.0 -= rhs.0;
    }
}

impl Sum for Power {
    fn sum<I: Iterator<Item = Power>>(iter: I) -> Power {
        iter.fold(Power::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Power> for Power {
    fn sum<I: Iterator<Item = &'a Power>>(iter: I) -> Power {
        iter.fold(Power::ZERO, |a, b| a + *b)
    }
}
