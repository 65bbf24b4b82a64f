//! Helpers for arbitrary-precision rationals.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"3/5"`, `"-2"`, or a finite decimal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Config(format!("not a rational literal: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Config(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = whole.trim_start().starts_with('-');
        let w = if whole.is_empty() || whole == "-" || whole == "+" {
            BigInt::zero()
        } else {
            BigInt::from_str(whole).map_err(|_| bad())?
        };
        let f = BigInt::from_str(frac).map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let mag = w.abs() * &scale + f;
        let num = if neg { -mag } else { mag };
        return Ok(Rational::new(num, scale));
    }
    BigInt::from_str(s).map(Rational::from_integer).map_err(|_| bad())
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact rational value of a finite `f64`.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// An `f64` that is guaranteed to be `>= r` (for `r >= 0`, possibly subnormal).
pub fn f64_upper(r: &Rational) -> f64 {
    let v = to_f64(r);
    if v.is_nan() {
        return f64::INFINITY;
    }
    v.next_up()
}

/// Natural logarithm of a positive big unsigned integer, accurate to a few ulps.
pub fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 63 {
        return (n.to_u64().unwrap() as f64).ln();
    }
    let shift = bits - 63;
    let top = (n >> shift).to_u64().unwrap() as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of a positive rational; `None` for non-positive input.
pub fn ln_rational(r: &Rational) -> Option<f64> {
    if !r.is_positive() {
        return None;
    }
    Some(ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude()))
}

pub fn ln_bigint(n: &BigInt) -> Option<f64> {
    if n.sign() != Sign::Plus {
        return None;
    }
    Some(ln_biguint(n.magnitude()))
}

pub fn lcm_all<'a>(it: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    it.into_iter().fold(BigInt::one(), |acc, d| acc.lcm(d))
}

pub fn floor_rational(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

pub fn ceil_rational(r: &Rational) -> BigInt {
    r.ceil().to_integer()
}

/// Compares `x <= q^(-c)` exactly for rational `x >= 0`, integer `q >= 1`, rational `c = a/b > 0`,
/// i.e. `x^b * q^a <= 1`.
pub fn le_inverse_power(x: &Rational, q: &BigInt, c: &Rational) -> bool {
    let a = c.numer().to_u32().expect("exponent numerator too large");
    let b = c.denom().to_u32().expect("exponent denominator too large");
    let lhs = num_traits::pow(x.clone(), b as usize) * Rational::from_integer(num_traits::pow(q.clone(), a as usize));
    lhs <= Rational::one()
}

/// Serializes through `Display`, so big integers survive JSON as strings.
pub fn ser_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn ser_rational<S: serde::Serializer>(v: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_literals() {
        assert_eq!(parse_rational("3/5").unwrap(), rat(3, 5));
        assert_eq!(parse_rational(" -2 ").unwrap(), int(-2));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn logs_of_huge_rationals() {
        let big = num_traits::pow(BigInt::from(10), 400);
        let r = Rational::new(BigInt::one(), big);
        let l = ln_rational(&r).unwrap();
        assert!((l + 400.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn inverse_power_comparison() {
        // 1/125 <= 5^-3 with equality
        assert!(le_inverse_power(&rat(1, 125), &BigInt::from(5), &int(3)));
        assert!(!le_inverse_power(&rat(1, 124), &BigInt::from(5), &int(3)));
        // 1/11 <= 10^(-1)
        assert!(le_inverse_power(&rat(1, 11), &BigInt::from(10), &int(1)));
    }
}
