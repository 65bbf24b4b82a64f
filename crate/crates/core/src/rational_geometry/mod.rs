//! Exact arithmetic for integral quadrics and height-bounded enumeration of their rational points.

pub mod enumerate;
mod hyperplane;
pub mod linalg;
mod point;
mod quadric;

pub use enumerate::{enumerate_points, Backend, EnumerationOptions};
pub use hyperplane::AffineHyperplane;
pub use linalg::{affine_rank, fit_hyperplane};
pub use point::RationalPoint;
pub use quadric::QuadraticHypersurface;
pub(crate) use quadric::invert_f64;

use num_traits::Signed;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::exact::{format_rational, Rational};

/// Closed axis-aligned box `∏ [lower_i, upper_i]` with rational corners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalBox {
    lower: Vec<Rational>,
    upper: Vec<Rational>,
}

impl RationalBox {
    pub fn new(lower: Vec<Rational>, upper: Vec<Rational>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidInput("empty box".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidInput("box has lower corner above upper corner".into()));
        }
        Ok(RationalBox { lower, upper })
    }

    /// The cube `∏ [c_i − r, c_i + r]`.
    pub fn cube(center: &[Rational], radius: &Rational) -> Result<Self> {
        if radius.is_negative() {
            return Err(Error::InvalidInput("negative radius".into()));
        }
        RationalBox::new(center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[Rational] {
        &self.lower
    }

    pub fn upper(&self) -> &[Rational] {
        &self.upper
    }

    pub fn contains(&self, x: &RationalPoint) -> bool {
        x.dim() == self.dim()
            && x.coords().iter().enumerate().all(|(i, c)| &self.lower[i] <= c && c <= &self.upper[i])
    }

    pub fn intersect(&self, other: &RationalBox) -> Result<Option<RationalBox>> {
        check_dim(self.dim(), other.dim())?;
        let lower: Vec<Rational> = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(b).clone()).collect();
        let upper: Vec<Rational> = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(b).clone()).collect();
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Ok(None);
        }
        Ok(Some(RationalBox { lower, upper }))
    }

    /// `max_i max(|lower_i|, |upper_i|)`.
    pub fn max_abs(&self) -> Rational {
        self.lower.iter().chain(&self.upper).map(|v| v.abs()).max().expect("box is nonempty")
    }
}

impl Serialize for RationalBox {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RationalBox", 2)?;
        st.serialize_field("lower", &self.lower.iter().map(format_rational).collect::<Vec<_>>())?;
        st.serialize_field("upper", &self.upper.iter().map(format_rational).collect::<Vec<_>>())?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    #[test]
    fn boxes() {
        let b = RationalBox::new(vec![int(-1), int(0)], vec![int(1), int(1)]).unwrap();
        assert!(b.contains(&RationalPoint::from_i64(&[3, 4], 5).unwrap()));
        assert!(!b.contains(&RationalPoint::from_i64(&[3, -4], 5).unwrap()));
        assert_eq!(b.max_abs(), int(1));
        assert!(RationalBox::new(vec![int(1)], vec![int(0)]).is_err());
        let c = RationalBox::cube(&[rat(1, 2), rat(1, 2)], &rat(1, 4)).unwrap();
        let i = b.intersect(&c).unwrap().unwrap();
        assert_eq!(i.lower(), &[rat(1, 4), rat(1, 4)]);
        let far = RationalBox::cube(&[int(5), int(5)], &int(1)).unwrap();
        assert!(b.intersect(&far).unwrap().is_none());
    }
}
