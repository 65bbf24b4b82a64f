use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{lcm_all, Rational};
use crate::interval::Interval;

/// A rational point `p/q` with `gcd(p_1, …, p_d, q) = 1` and `q >= 1`.
///
/// The canonical form is the set key everywhere points are deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalPoint {
    numerators: Vec<BigInt>,
    denominator: BigInt,
}

impl RationalPoint {
    /// Normalizes `(p, q)` to primitive form with positive denominator.
    pub fn new(numerators: Vec<BigInt>, denominator: BigInt) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        if numerators.is_empty() {
            return Err(Error::InvalidInput("empty point".into()));
        }
        let mut g = denominator.abs();
        for p in &numerators {
            g = g.gcd(p);
        }
        let flip = denominator.is_negative();
        let numerators = numerators
            .into_iter()
            .map(|p| {
                let p = p / &g;
                if flip {
                    -p
                } else {
                    p
                }
            })
            .collect();
        let denominator = denominator.abs() / g;
        Ok(RationalPoint { numerators, denominator })
    }

    pub fn from_i64(numerators: &[i64], denominator: i64) -> Result<Self> {
        RationalPoint::new(numerators.iter().map(|&p| BigInt::from(p)).collect(), BigInt::from(denominator))
    }

    pub fn from_rationals(coords: &[Rational]) -> Result<Self> {
        let q = lcm_all(coords.iter().map(|c| c.denom()));
        let nums = coords.iter().map(|c| c.numer() * (&q / c.denom())).collect();
        RationalPoint::new(nums, q)
    }

    /// Exact rational value of each coordinate of an `f64` vector.
    pub fn from_f64(coords: &[f64]) -> Result<Self> {
        let rs = coords
            .iter()
            .map(|&x| Rational::from_float(x).ok_or_else(|| Error::InvalidInput(format!("non-finite coordinate {x}"))))
            .collect::<Result<Vec<_>>>()?;
        RationalPoint::from_rationals(&rs)
    }

    pub fn dim(&self) -> usize {
        self.numerators.len()
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.numerators
    }

    pub fn denominator(&self) -> &BigInt {
        &self.denominator
    }

    pub fn coord(&self, i: usize) -> Rational {
        Rational::new(self.numerators[i].clone(), self.denominator.clone())
    }

    pub fn coords(&self) -> Vec<Rational> {
        (0..self.dim()).map(|i| self.coord(i)).collect()
    }

    /// Nearest-`f64` coordinates.
    pub fn to_f64(&self) -> Vec<f64> {
        if let (Some(q), true) = (self.denominator.to_i64(), self.fits_f64_exactly()) {
            let q = q as f64;
            return self.numerators.iter().map(|p| p.to_i64().unwrap() as f64 / q).collect();
        }
        self.coords().iter().map(crate::exact::to_f64).collect()
    }

    /// Certified enclosures of the coordinates.
    pub fn enclosure(&self) -> Vec<Interval> {
        if self.fits_f64_exactly() {
            let q = self.denominator.to_i64().unwrap() as f64;
            return self.numerators.iter().map(|p| Interval::ratio(p.to_i64().unwrap() as f64, q)).collect();
        }
        self.coords().iter().map(Interval::from_rational).collect()
    }

    fn fits_f64_exactly(&self) -> bool {
        const LIM: u64 = 1 << 53;
        let ok = |b: &BigInt| b.magnitude().to_u64().is_some_and(|v| v < LIM);
        ok(&self.denominator) && self.numerators.iter().all(ok)
    }

    /// Max-norm distance to another rational point, exactly.
    pub fn max_dist(&self, other: &RationalPoint) -> Rational {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(Rational::zero(), |m, d| if d > m { d } else { m })
    }

    pub fn is_integral(&self) -> bool {
        self.denominator.is_one()
    }
}

impl Ord for RationalPoint {
    /// Denominator first, then numerators lexicographically.
    fn cmp(&self, other: &Self) -> Ordering {
        self.denominator
            .cmp(&other.denominator)
            .then_with(|| self.numerators.cmp(&other.numerators))
    }
}

impl PartialOrd for RationalPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", crate::exact::format_rational(c))?;
        }
        write!(f, ")")
    }
}

/// Serialized as `{"p": ["3", "4"], "q": "5"}` so arbitrary precision survives JSON.
impl Serialize for RationalPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RationalPoint", 2)?;
        let p: Vec<String> = self.numerators.iter().map(|n| n.to_string()).collect();
        st.serialize_field("p", &p)?;
        st.serialize_field("q", &self.denominator.to_string())?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalizes_sign_and_gcd() {
        let p = RationalPoint::from_i64(&[-6, -8], -10).unwrap();
        assert_eq!(p, RationalPoint::from_i64(&[3, 4], 5).unwrap());
        assert_eq!(p.denominator(), &BigInt::from(5));
        assert!(RationalPoint::from_i64(&[1], 0).is_err());
    }

    #[test]
    fn ordering_is_denominator_then_lex() {
        let mut v = [RationalPoint::from_i64(&[4, 3], 5).unwrap(),
            RationalPoint::from_i64(&[0, 1], 1).unwrap(),
            RationalPoint::from_i64(&[-1, 0], 1).unwrap(),
            RationalPoint::from_i64(&[3, 4], 5).unwrap()];
        v.sort();
        let s: Vec<String> = v.iter().map(|p| p.to_string()).collect();
        assert_eq!(s, ["(-1, 0)", "(0, 1)", "(3/5, 4/5)", "(4/5, 3/5)"]);
    }

    #[test]
    fn from_f64_is_exact() {
        let p = RationalPoint::from_f64(&[0.5, -0.25]).unwrap();
        assert_eq!(p, RationalPoint::from_i64(&[2, -1], 4).unwrap());
    }

    proptest! {
        #[test]
        fn canonicalization_is_idempotent(ps in prop::collection::vec(-1000i64..1000, 1..4), q in -500i64..500) {
            prop_assume!(q != 0);
            let a = RationalPoint::from_i64(&ps, q).unwrap();
            let b = RationalPoint::new(a.numerators().to_vec(), a.denominator().clone()).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.denominator() >= &BigInt::one());
            let neg = RationalPoint::new(ps.iter().map(|&p| BigInt::from(-p)).collect(), BigInt::from(-q)).unwrap();
            prop_assert_eq!(a, neg);
        }
    }
}
