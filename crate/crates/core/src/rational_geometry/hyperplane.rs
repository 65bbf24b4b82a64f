use num_traits::{Signed, Zero};
use serde::Serialize;

use super::RationalPoint;
use crate::error::{check_dim, Error, Result};
use crate::exact::{format_rational, to_f64, Rational};

/// `{x : ⟨normal, x⟩ = offset}` with a nonzero rational normal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineHyperplane {
    normal: Vec<Rational>,
    offset: Rational,
}

impl AffineHyperplane {
    pub fn new(normal: Vec<Rational>, offset: Rational) -> Result<Self> {
        if normal.iter().all(Zero::is_zero) {
            return Err(Error::InvalidInput("hyperplane normal is zero".into()));
        }
        Ok(AffineHyperplane { normal, offset })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &[Rational] {
        &self.normal
    }

    pub fn offset(&self) -> &Rational {
        &self.offset
    }

    /// `⟨normal, x⟩ − offset`, exactly.
    pub fn signed_residual(&self, x: &RationalPoint) -> Rational {
        let s: Rational = self.normal.iter().zip(x.coords()).map(|(n, c)| n * c).sum();
        s - &self.offset
    }

    pub fn contains(&self, x: &RationalPoint) -> bool {
        x.dim() == self.dim() && self.signed_residual(x).is_zero()
    }

    fn normal_norm_sq(&self) -> Rational {
        self.normal.iter().map(|n| n * n).sum()
    }

    /// Exact test of `dist(x, L) <= rho`, i.e. `(⟨n,x⟩ − t)² <= rho²·‖n‖²`.
    pub fn within_distance(&self, x: &RationalPoint, rho: &Rational) -> Result<bool> {
        check_dim(self.dim(), x.dim())?;
        if rho.is_negative() {
            return Ok(false);
        }
        let r = self.signed_residual(x);
        Ok(&r * &r <= rho * rho * self.normal_norm_sq())
    }

    /// Euclidean distance from an exact rational point, rounded to `f64`.
    pub fn distance_rational(&self, x: &RationalPoint) -> Result<f64> {
        check_dim(self.dim(), x.dim())?;
        let r = self.signed_residual(x);
        // squared distance is scale invariant as an exact rational
        Ok(to_f64(&(&r * &r / self.normal_norm_sq())).sqrt())
    }

    /// Euclidean distance from a floating point.
    pub fn distance_f64(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let (n, t) = self.to_f64();
        let s: f64 = n.iter().zip(x).map(|(a, b)| a * b).sum();
        let nn: f64 = n.iter().map(|a| a * a).sum::<f64>().sqrt();
        Ok((s - t).abs() / nn)
    }

    pub fn to_f64(&self) -> (Vec<f64>, f64) {
        (self.normal.iter().map(to_f64).collect(), to_f64(&self.offset))
    }

    pub fn scaled(&self, lambda: &Rational) -> Result<Self> {
        if lambda.is_zero() {
            return Err(Error::InvalidInput("zero rescaling".into()));
        }
        AffineHyperplane::new(self.normal.iter().map(|n| n * lambda).collect(), &self.offset * lambda)
    }
}

impl Serialize for AffineHyperplane {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("AffineHyperplane", 2)?;
        let n: Vec<String> = self.normal.iter().map(format_rational).collect();
        st.serialize_field("normal", &n)?;
        st.serialize_field("offset", &format_rational(&self.offset))?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use proptest::prelude::*;

    fn x_axis() -> AffineHyperplane {
        AffineHyperplane::new(vec![int(0), int(1)], int(0)).unwrap()
    }

    #[test]
    fn distances() {
        let o = RationalPoint::from_i64(&[0, 0], 1).unwrap();
        assert_eq!(x_axis().distance_rational(&o).unwrap(), 0.0);
        let e2 = RationalPoint::from_i64(&[0, 1], 1).unwrap();
        assert_eq!(x_axis().distance_rational(&e2).unwrap(), 1.0);
        let diag = AffineHyperplane::new(vec![int(1), int(1)], int(0)).unwrap();
        let p = RationalPoint::from_i64(&[1, 1], 1).unwrap();
        assert!((diag.distance_rational(&p).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((diag.distance_f64(&[1.0, 1.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exact_thickening_membership() {
        let diag = AffineHyperplane::new(vec![int(1), int(1)], int(0)).unwrap();
        let p = RationalPoint::from_i64(&[1, 1], 1).unwrap();
        // distance is √2: inside for ρ = 3/2, outside for ρ = 7/5
        assert!(diag.within_distance(&p, &rat(3, 2)).unwrap());
        assert!(!diag.within_distance(&p, &rat(7, 5)).unwrap());
    }

    #[test]
    fn zero_normal_rejected() {
        assert!(AffineHyperplane::new(vec![int(0), int(0)], int(1)).is_err());
    }

    proptest! {
        #[test]
        fn distance_is_scale_invariant(a in -9i64..9, b in -9i64..9, t in -9i64..9, n in 1i64..7, m in 1i64..7,
                                       px in -20i64..20, py in -20i64..20, q in 1i64..9) {
            prop_assume!(a != 0 || b != 0);
            let h = AffineHyperplane::new(vec![int(a), int(b)], int(t)).unwrap();
            let s = h.scaled(&rat(-n, m)).unwrap();
            let x = RationalPoint::from_i64(&[px, py], q).unwrap();
            prop_assert_eq!(h.distance_rational(&x).unwrap(), s.distance_rational(&x).unwrap());
            let rho = rat(px.abs() + 1, q + 2);
            prop_assert_eq!(h.within_distance(&x, &rho).unwrap(), s.within_distance(&x, &rho).unwrap());
        }
    }
}
