//! Numeric backends for probabilities.
//!
//! Angle-free models (GHZ, PR box) run on exact rationals so that their
//! checks can demand zero deviation. Anything involving `cos` runs on `f64`
//! with a fixed absolute tolerance of `1e-12`.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Absolute tolerance for every float-backend probability comparison.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Rational,
    Float,
}

impl Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Rational => f.write_str("rational"),
            Backend::Float => f.write_str("float"),
        }
    }
}

/// A probability value in one of the two backends.
pub trait Prob:
    Num + Signed + PartialOrd + Clone + Debug + Display + Send + Sync + 'static
{
    const BACKEND: Backend;

    /// Largest deviation still treated as equality.
    fn tolerance() -> Self;

    fn ratio(num: i64, den: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Text form used in JSON: `"n/d"` for rationals (`"n"` when integral),
    /// shortest round-trip decimal for floats.
    fn encode(&self) -> String;

    fn decode(text: &str) -> Result<Self>;

    fn half() -> Self {
        Self::ratio(1, 2)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tolerance()
    }

    fn is_finite_prob(&self) -> bool;
}

impl Prob for f64 {
    const BACKEND: Backend = Backend::Float;

    fn tolerance() -> Self {
        FLOAT_TOLERANCE
    }

    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn encode(&self) -> String {
        format!("{self:?}")
    }

    fn decode(text: &str) -> Result<Self> {
        text.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::ParseProb(text.to_string()))
    }

    fn is_finite_prob(&self) -> bool {
        self.is_finite()
    }
}

impl Prob for Rational {
    const BACKEND: Backend = Backend::Rational;

    fn tolerance() -> Self {
        Rational::zero()
    }

    fn ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn encode(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn decode(text: &str) -> Result<Self> {
        let text = text.trim();
        let err = || Error::ParseProb(text.to_string());
        let (num, den) = match text.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (text, "1"),
        };
        let num = BigInt::from_str_radix(num, 10).map_err(|_| err())?;
        let den = BigInt::from_str_radix(den, 10).map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        Ok(Rational::new(num, den))
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn is_finite_prob(&self) -> bool {
        true
    }
}

/// Converts an exact rational into the float backend.
pub fn rational_to_f64(value: &Rational) -> f64 {
    Prob::to_f64(value)
}

pub(crate) fn sum<P: Prob, I: IntoIterator<Item = P>>(items: I) -> P {
    items.into_iter().fold(P::zero(), |acc, p| acc + p)
}

pub(crate) fn product<P: Prob, I: IntoIterator<Item = P>>(items: I) -> P {
    items.into_iter().fold(P::one(), |acc, p| acc * p)
}

pub(crate) fn within_unit<P: Prob>(p: &P) -> bool {
    let tol = P::tolerance();
    *p >= -tol.clone() && *p <= P::one() + tol
}

pub(crate) fn max_of<P: Prob>(a: P, b: P) -> P {
    if b > a {
        b
    } else {
        a
    }
}
