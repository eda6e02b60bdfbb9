//! Numeric backends.
//!
//! Every exact checker is generic over [`Scalar`], implemented for `f64`
//! (tolerance-based sign decisions) and [`Rational`] (exact arithmetic).
//! Verdicts carry the [`Backend`] that produced them.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arbitrary precision rational.
pub type Rational = num_rational::BigRational;

/// Which arithmetic produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Float,
    Rational,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "float" => Ok(Backend::Float),
            "rational" => Ok(Backend::Rational),
            other => Err(Error::Parse(format!("unknown number mode `{other}`"))),
        }
    }
}

impl Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Float => f.write_str("float"),
            Backend::Rational => f.write_str("rational"),
        }
    }
}

pub trait Scalar:
    Num + Signed + FromPrimitive + ToPrimitive + Clone + PartialOrd + Debug + Display + Send + Sync + 'static
{
    const BACKEND: Backend;

    /// Values with magnitude at most this are treated as zero in sign decisions.
    fn sign_tol() -> Self;

    /// Tolerance used for probability mass checks.
    fn mass_tol() -> Self;

    /// Pivot / reduced-cost tolerance for the simplex method.
    fn lp_tol() -> Self;

    /// Default tolerance for the joint-mix (constant sum) test.
    fn jm_tol() -> Self;

    fn floor_val(&self) -> Self;

    /// Flushes round-off residue to exact zero inside the simplex tableau.
    fn snap_tiny(self) -> Self {
        self
    }

    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer conversion")
    }

    fn to_f(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn to_json(&self) -> serde_json::Value;

    fn from_json(v: &serde_json::Value) -> Result<Self>;

    fn is_finite_val(&self) -> bool;

    /// `self > sign_tol`.
    fn is_pos_tol(&self) -> bool {
        *self > Self::sign_tol()
    }

    /// `|self| <= sign_tol`.
    fn is_zero_tol(&self) -> bool {
        self.abs() <= Self::sign_tol()
    }

    fn approx_eq(&self, other: &Self, tol: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= *tol
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    /// Total order used for sorting support points. NaN never occurs after validation.
    fn cmp_total(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).unwrap_or(std::cmp::Ordering::Equal)
    }
}

impl Scalar for f64 {
    const BACKEND: Backend = Backend::Float;

    fn sign_tol() -> Self {
        1e-10
    }

    fn mass_tol() -> Self {
        1e-12
    }

    fn lp_tol() -> Self {
        1e-9
    }

    fn jm_tol() -> Self {
        1e-9
    }

    fn floor_val(&self) -> Self {
        self.floor()
    }

    fn snap_tiny(self) -> Self {
        if self.abs() < 1e-13 {
            0.0
        } else {
            self
        }
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }

    fn from_json(v: &serde_json::Value) -> Result<Self> {
        match v {
            serde_json::Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("bad number {n}"))),
            serde_json::Value::String(s) => Ok(parse_rational(s)?.to_f()),
            other => Err(Error::Parse(format!("expected number, got {other}"))),
        }
    }

    fn is_finite_val(&self) -> bool {
        self.is_finite()
    }

    fn cmp_total(&self, other: &Self) -> std::cmp::Ordering {
        self.total_cmp(other)
    }
}

impl Scalar for Rational {
    const BACKEND: Backend = Backend::Rational;

    fn sign_tol() -> Self {
        Rational::zero()
    }

    fn mass_tol() -> Self {
        Rational::zero()
    }

    fn lp_tol() -> Self {
        Rational::zero()
    }

    fn jm_tol() -> Self {
        Rational::zero()
    }

    fn floor_val(&self) -> Self {
        self.floor()
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format_rational(self))
    }

    fn from_json(v: &serde_json::Value) -> Result<Self> {
        match v {
            serde_json::Value::String(s) => parse_rational(s),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Rational::from_integer(BigInt::from(i)))
                } else {
                    // decimal literals are read exactly from their text form
                    parse_rational(&n.to_string())
                }
            }
            other => Err(Error::Parse(format!("expected rational, got {other}"))),
        }
    }

    fn is_finite_val(&self) -> bool {
        true
    }
}

/// Formats a rational as `"num/den"` (or `"num"` for integers).
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"num/den"`, an integer, or a finite decimal literal like `"-0.125"` or `"1e-3"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("cannot parse `{s}` as a rational"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    if !all.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let mut num: BigInt = Num::from_str_radix(&all, 10).map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(r)
}

/// Rational from a small fraction; panics on zero denominator.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact conversion of a scalar to a rational (floats convert by their binary value).
pub fn to_rational<T: Scalar>(v: &T) -> Rational {
    match T::BACKEND {
        Backend::Rational => {
            let any: &dyn std::any::Any = v;
            any.downcast_ref::<Rational>().cloned().expect("rational backend")
        }
        Backend::Float => Rational::from_f64(v.to_f()).unwrap_or_else(Rational::zero),
    }
}

/// Least common multiple of the denominators of a set of rationals.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

pub(crate) mod ser {
    //! `serialize_with` helpers for generic scalar fields.
    use super::Scalar;
    use serde::ser::{SerializeSeq, Serializer};

    pub fn scalar<T: Scalar, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&v.to_json(), s)
    }

    pub fn vec<T: Scalar, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&x.to_json())?;
        }
        seq.end()
    }

    pub fn mat<T: Scalar, S: Serializer>(v: &[Vec<T>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for row in v {
            let r: Vec<_> = row.iter().map(|x| x.to_json()).collect();
            seq.serialize_element(&r)?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse_rational("-0.125").unwrap(), ratio(-1, 8));
        assert_eq!(parse_rational("2").unwrap(), ratio(2, 1));
        assert_eq!(parse_rational("1e-2").unwrap(), ratio(1, 100));
        assert_eq!(parse_rational("2.5E1").unwrap(), ratio(25, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn rational_json_round_trip() {
        let r = ratio(-7, 3);
        let j = r.to_json();
        assert_eq!(j, serde_json::json!("-7/3"));
        assert_eq!(Rational::from_json(&j).unwrap(), r);
        assert_eq!(Rational::from_json(&serde_json::json!(0.5)).unwrap(), ratio(1, 2));
    }

    #[test]
    fn float_tolerances() {
        assert!(1e-11f64.is_zero_tol());
        assert!(!1e-9f64.is_zero_tol());
        assert!(!ratio(1, 1_000_000_000_000).is_zero_tol());
    }
}
