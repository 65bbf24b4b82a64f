use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

use super::{RationalBox, RationalPoint};
use crate::error::{check_dim, Error, Result};
use crate::exact::{int, rat, Rational};
use crate::interval::Interval;

/// The zero set of `P(x) = xᵀAx + bᵀx + c` with `A` a symmetric integer matrix.
///
/// Cross terms are `2·A_ij·x_i·x_j`, so `x₁x₂` itself is not representable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticHypersurface {
    quadratic: Vec<Vec<i64>>,
    linear: Vec<i64>,
    constant: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    base_point: Option<RationalPoint>,
}

impl QuadraticHypersurface {
    pub fn new(quadratic: Vec<Vec<i64>>, linear: Vec<i64>, constant: i64) -> Result<Self> {
        let d = linear.len();
        if d < 2 {
            return Err(Error::InvalidInput(format!("dimension must be at least 2, got {d}")));
        }
        if quadratic.len() != d || quadratic.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("quadratic part must be a d×d matrix".into()));
        }
        for i in 0..d {
            for j in 0..i {
                if quadratic[i][j] != quadratic[j][i] {
                    return Err(Error::InvalidInput(format!("quadratic part is not symmetric at ({i},{j})")));
                }
            }
        }
        let all_zero = quadratic.iter().flatten().all(|&a| a == 0) && linear.iter().all(|&b| b == 0) && constant == 0;
        if all_zero {
            return Err(Error::InvalidInput("all coefficients vanish".into()));
        }
        Ok(QuadraticHypersurface { quadratic, linear, constant, base_point: None })
    }

    /// Attaches a rational point of the regular locus, verified exactly.
    pub fn with_base_point(mut self, base: RationalPoint) -> Result<Self> {
        check_dim(self.dim(), base.dim())?;
        if !self.evaluate(&base)?.is_zero() {
            return Err(Error::InvalidInput(format!("base point {base} is not on the quadric")));
        }
        if !self.is_regular_at(&base)? {
            return Err(Error::InvalidInput(format!("base point {base} is singular")));
        }
        self.base_point = Some(base);
        Ok(self)
    }

    /// `x₁² + … + x_d² = 1` with base point `(1, 0, …, 0)`.
    pub fn unit_sphere(d: usize) -> Self {
        let quadratic = (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect();
        let mut base = vec![0i64; d];
        base[0] = 1;
        QuadraticHypersurface::new(quadratic, vec![0; d], -1)
            .and_then(|z| z.with_base_point(RationalPoint::from_i64(&base, 1)?))
            .expect("unit sphere is valid")
    }

    /// `x₁² − n·x₂² = 1` with base point `(1, 0)`.
    pub fn pell(n: i64) -> Self {
        QuadraticHypersurface::new(vec![vec![1, 0], vec![0, -n]], vec![0, 0], -1)
            .and_then(|z| z.with_base_point(RationalPoint::from_i64(&[1, 0], 1)?))
            .expect("Pell conic is valid")
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn quadratic(&self) -> &[Vec<i64>] {
        &self.quadratic
    }

    pub fn linear(&self) -> &[i64] {
        &self.linear
    }

    pub fn constant(&self) -> i64 {
        self.constant
    }

    pub fn base_point(&self) -> Option<&RationalPoint> {
        self.base_point.as_ref()
    }

    /// Exact `P(p/q)`.
    pub fn evaluate(&self, x: &RationalPoint) -> Result<Rational> {
        check_dim(self.dim(), x.dim())?;
        let h = self.homogeneous_big(x.numerators(), x.denominator());
        let q = x.denominator();
        Ok(Rational::new(h, q * q))
    }

    /// `q²·P(p/q) = pᵀAp + q·bᵀp + c·q²` in big integers.
    pub fn homogeneous_big(&self, p: &[BigInt], q: &BigInt) -> BigInt {
        let d = self.dim();
        let mut acc = BigInt::zero();
        for i in 0..d {
            let mut row = BigInt::zero();
            for j in 0..d {
                if self.quadratic[i][j] != 0 {
                    row += &p[j] * self.quadratic[i][j];
                }
            }
            acc += &p[i] * row;
            if self.linear[i] != 0 {
                acc += q * &p[i] * self.linear[i];
            }
        }
        acc + q * q * self.constant
    }

    /// `q²·P(p/q)` in `i128`, `None` on overflow.
    pub fn homogeneous_i128(&self, p: &[i128], q: i128) -> Option<i128> {
        let d = self.dim();
        let mut acc: i128 = 0;
        for i in 0..d {
            let mut row: i128 = 0;
            for j in 0..d {
                let a = self.quadratic[i][j] as i128;
                if a != 0 {
                    row = row.checked_add(a.checked_mul(p[j])?)?;
                }
            }
            acc = acc.checked_add(p[i].checked_mul(row)?)?;
            let b = self.linear[i] as i128;
            if b != 0 {
                acc = acc.checked_add(q.checked_mul(p[i])?.checked_mul(b)?)?;
            }
        }
        acc.checked_add(q.checked_mul(q)?.checked_mul(self.constant as i128)?)
    }

    /// Exact `∇P(p/q) = 2A·x + b`.
    pub fn gradient_at(&self, x: &RationalPoint) -> Result<Vec<Rational>> {
        check_dim(self.dim(), x.dim())?;
        let g = self.gradient_numerators(x.numerators(), x.denominator());
        Ok(g.into_iter().map(|n| Rational::new(n, x.denominator().clone())).collect())
    }

    /// Integer vector `q·∇P(p/q) = 2A·p + q·b`.
    pub fn gradient_numerators(&self, p: &[BigInt], q: &BigInt) -> Vec<BigInt> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                let mut s = BigInt::zero();
                for j in 0..d {
                    if self.quadratic[i][j] != 0 {
                        s += &p[j] * (2 * self.quadratic[i][j]);
                    }
                }
                s + q * self.linear[i]
            })
            .collect()
    }

    pub fn is_regular_at(&self, x: &RationalPoint) -> Result<bool> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.gradient_numerators(x.numerators(), x.denominator()).iter().any(|g| !g.is_zero()))
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = self.constant as f64;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.quadratic[i][j] as f64 * x[j];
            }
            acc += x[i] * row + self.linear[i] as f64 * x[i];
        }
        acc
    }

    pub fn gradient_f64(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                let s: f64 = (0..d).map(|j| 2.0 * self.quadratic[i][j] as f64 * x[j]).sum();
                s + self.linear[i] as f64
            })
            .collect()
    }

    /// Interval enclosure of `P` over a box of intervals.
    pub fn eval_interval(&self, x: &[Interval]) -> Interval {
        let d = self.dim();
        let mut acc = Interval::point(self.constant as f64);
        for i in 0..d {
            let a = self.quadratic[i][i] as f64;
            if a != 0.0 {
                acc = acc + x[i].sqr() * a;
            }
            for j in 0..i {
                let a = self.quadratic[i][j] as f64;
                if a != 0.0 {
                    acc = acc + x[i] * x[j] * (2.0 * a);
                }
            }
            let b = self.linear[i] as f64;
            if b != 0.0 {
                acc = acc + x[i] * b;
            }
        }
        acc
    }

    pub fn gradient_interval(&self, x: &[Interval]) -> Vec<Interval> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                let mut s = Interval::point(self.linear[i] as f64);
                for j in 0..d {
                    let a = self.quadratic[i][j] as f64;
                    if a != 0.0 {
                        s = s + x[j] * (2.0 * a);
                    }
                }
                s
            })
            .collect()
    }

    /// Exact Sylvester test on the leading principal minors.
    /// Returns `Some(+1)` for positive definite, `Some(-1)` for negative definite.
    pub fn definiteness(&self) -> Option<i8> {
        let d = self.dim();
        let minors: Vec<Rational> = (1..=d)
            .map(|k| {
                let m: Vec<Vec<Rational>> =
                    (0..k).map(|i| (0..k).map(|j| int(self.quadratic[i][j])).collect()).collect();
                super::linalg::determinant(m)
            })
            .collect();
        if minors.iter().all(|m| m.is_positive()) {
            return Some(1);
        }
        // -A positive definite: minors alternate in sign, starting negative
        let neg = minors.iter().enumerate().all(|(k, m)| if k % 2 == 0 { m.is_negative() } else { m.is_positive() });
        if neg {
            Some(-1)
        } else {
            None
        }
    }

    /// A rational box containing the whole zero set, when the quadratic part is definite.
    ///
    /// Computed in floating point and rounded outward to the grid `1/64` with a margin,
    /// so a point on the quadric can never fall outside.
    pub fn bounding_box(&self) -> Option<RationalBox> {
        let sign = self.definiteness()? as f64;
        let d = self.dim();
        let a: Vec<Vec<f64>> = self.quadratic.iter().map(|r| r.iter().map(|&v| sign * v as f64).collect()).collect();
        let b: Vec<f64> = self.linear.iter().map(|&v| sign * v as f64).collect();
        let c = sign * self.constant as f64;
        let inv = invert_f64(&a)?;
        // center = -A⁻¹b/2; zero set is (x-m)ᵀA(x-m) = mᵀAm - c
        let m: Vec<f64> = (0..d).map(|i| -0.5 * (0..d).map(|j| inv[i][j] * b[j]).sum::<f64>()).collect();
        let mam: f64 = (0..d).map(|i| m[i] * (0..d).map(|j| a[i][j] * m[j]).sum::<f64>()).sum();
        let level = mam - c;
        if level < -1e-9 * (1.0 + mam.abs() + c.abs()) {
            // empty zero set; any box works
            return RationalBox::new(vec![int(0); d], vec![int(0); d]).ok();
        }
        let level = level.max(0.0);
        let mut lower = Vec::with_capacity(d);
        let mut upper = Vec::with_capacity(d);
        for i in 0..d {
            let e = (level * inv[i][i].max(0.0)).sqrt();
            let margin = 1e-6 * (1.0 + m[i].abs() + e);
            lower.push(rat(((m[i] - e - margin) * 64.0).floor() as i64, 64));
            upper.push(rat(((m[i] + e + margin) * 64.0).ceil() as i64, 64));
        }
        RationalBox::new(lower, upper).ok()
    }

    /// Largest absolute coefficient, used in a-priori overflow checks.
    pub fn coefficient_height(&self) -> i64 {
        self.quadratic
            .iter()
            .flatten()
            .chain(self.linear.iter())
            .chain(std::iter::once(&self.constant))
            .map(|v| v.abs())
            .max()
            .unwrap_or(0)
    }

    /// True when `P(x)` is within `tol` of zero for some point of the enclosure of `x`.
    pub fn near_zero_f64(&self, x: &[f64], tol: f64) -> (bool, f64) {
        let iv: Vec<Interval> = x.iter().map(|&v| Interval::point(v)).collect();
        let p = self.eval_interval(&iv);
        (p.mig() <= tol, p.mag())
    }

    pub fn to_rational_parts(&self) -> (Vec<Vec<Rational>>, Vec<Rational>, Rational) {
        (
            self.quadratic.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect(),
            self.linear.iter().map(|&v| int(v)).collect(),
            int(self.constant),
        )
    }

    pub fn base_height(&self) -> Option<BigInt> {
        self.base_point.as_ref().map(|b| {
            b.numerators().iter().map(|p| p.abs()).max().unwrap_or_default().max(b.denominator().clone())
        })
    }

    pub fn coefficient_f64(&self) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
        (
            self.quadratic.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect(),
            self.linear.iter().map(|&v| v as f64).collect(),
            self.constant as f64,
        )
    }
}

pub(crate) fn invert_f64(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> QuadraticHypersurface {
        QuadraticHypersurface::unit_sphere(2)
    }

    #[test]
    fn evaluates_circle_points() {
        let z = circle();
        assert_eq!(z.evaluate(&RationalPoint::from_i64(&[1, 0], 1).unwrap()).unwrap(), int(0));
        assert_eq!(z.evaluate(&RationalPoint::from_i64(&[3, 4], 5).unwrap()).unwrap(), int(0));
        assert_eq!(z.evaluate(&RationalPoint::from_i64(&[1, 1], 2).unwrap()).unwrap(), rat(-1, 2));
        assert!(matches!(
            z.evaluate(&RationalPoint::from_i64(&[1, 0, 0], 1).unwrap()),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn gradients() {
        let z = circle();
        let g = z.gradient_at(&RationalPoint::from_i64(&[1, 0], 1).unwrap()).unwrap();
        assert_eq!(g, vec![int(2), int(0)]);

        let cone = QuadraticHypersurface::new(vec![vec![1, 0], vec![0, -1]], vec![0, 0], 0).unwrap();
        let o = RationalPoint::from_i64(&[0, 0], 1).unwrap();
        assert_eq!(cone.gradient_at(&o).unwrap(), vec![int(0), int(0)]);
        assert!(!cone.is_regular_at(&o).unwrap());

        let s2 = QuadraticHypersurface::unit_sphere(3);
        let g = s2.gradient_at(&RationalPoint::from_i64(&[3, 4, 0], 5).unwrap()).unwrap();
        assert_eq!(g, vec![rat(6, 5), rat(8, 5), int(0)]);
    }

    #[test]
    fn rejects_invalid_quadrics() {
        assert!(QuadraticHypersurface::new(vec![vec![0, 0], vec![0, 0]], vec![0, 0], 0).is_err());
        assert!(QuadraticHypersurface::new(vec![vec![1, 1], vec![0, 1]], vec![0, 0], -1).is_err());
        assert!(QuadraticHypersurface::new(vec![vec![1]], vec![0], -1).is_err());
        let z = QuadraticHypersurface::new(vec![vec![1, 0], vec![0, 1]], vec![0, 0], -1).unwrap();
        assert!(z.clone().with_base_point(RationalPoint::from_i64(&[1, 1], 2).unwrap()).is_err());
        let cone = QuadraticHypersurface::new(vec![vec![1, 0], vec![0, -1]], vec![0, 0], 0).unwrap();
        assert!(cone.with_base_point(RationalPoint::from_i64(&[0, 0], 1).unwrap()).is_err());
    }

    #[test]
    fn definiteness_and_boxes() {
        assert_eq!(circle().definiteness(), Some(1));
        assert_eq!(QuadraticHypersurface::pell(2).definiteness(), None);
        let bx = circle().bounding_box().unwrap();
        assert!(bx.lower()[0] <= int(-1) && bx.upper()[1] >= int(1));
        assert!(bx.upper()[0] < int(2));
        let neg = QuadraticHypersurface::new(vec![vec![-1, 0], vec![0, -1]], vec![0, 0], 1).unwrap();
        assert_eq!(neg.definiteness(), Some(-1));
        // shifted ellipse (x-3)^2 + 2y^2 = 4
        let e = QuadraticHypersurface::new(vec![vec![1, 0], vec![0, 2]], vec![-6, 0], 5).unwrap();
        let bx = e.bounding_box().unwrap();
        assert!(bx.lower()[0] <= int(1) && bx.upper()[0] >= int(5));
    }

    #[test]
    fn homogeneous_forms_agree() {
        let z = QuadraticHypersurface::new(vec![vec![2, 1], vec![1, -3]], vec![5, -7], 11).unwrap();
        let p = [BigInt::from(3), BigInt::from(-4)];
        let big = z.homogeneous_big(&p, &BigInt::from(7));
        assert_eq!(big, BigInt::from(z.homogeneous_i128(&[3, -4], 7).unwrap()));
        let x = RationalPoint::from_i64(&[3, -4], 7).unwrap();
        assert_eq!(z.evaluate(&x).unwrap(), Rational::new(big, BigInt::from(49)));
        assert!((z.eval_f64(&[3.0 / 7.0, -4.0 / 7.0]) - crate::exact::to_f64(&z.evaluate(&x).unwrap())).abs() < 1e-12);
    }
}
