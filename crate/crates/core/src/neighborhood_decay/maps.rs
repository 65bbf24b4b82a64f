//! Nonsingular polynomial maps with certified derivative bounds.

use crate::error::{check_dim, Error, Result};
use crate::exact::{int, Rational};
use crate::fractal_measures::{IdentityMap, IntervalMap};
use crate::interval::Interval;
use crate::rational_geometry::{invert_f64, RationalBox};

/// A map with `‖Φ'(x)⁻¹‖ <= c0` and `‖Φ''(x)‖ <= c1` on its domain.
pub trait NonsingularMap: IntervalMap {
    fn c0(&self) -> f64;
    fn c1(&self) -> f64;

    /// Scale below which hyperplane slabs pull back to nearly flat slabs: `1/(2·c0·c1)`.
    fn rho_cap(&self) -> f64 {
        let p = self.c0() * self.c1();
        if p == 0.0 {
            f64::INFINITY
        } else {
            (0.5 / p).next_down()
        }
    }
}

impl NonsingularMap for IdentityMap {
    fn c0(&self) -> f64 {
        1.0
    }
    fn c1(&self) -> f64 {
        0.0
    }
}

/// `Φ_i(x) = t_i + Σ_j L_ij x_j + Σ_jl Q_ijl x_j x_l` on a box, `Q_i` symmetric.
#[derive(Clone, Debug)]
pub struct QuadraticMap {
    linear: Vec<Vec<Interval>>,
    quad: Vec<Vec<Vec<Interval>>>,
    shift: Vec<Interval>,
    domain: Vec<Interval>,
    c0: f64,
    c1: f64,
    lip: f64,
}

const GRID_CELLS: usize = 1024;

impl QuadraticMap {
    pub fn new(
        linear: Vec<Vec<Rational>>,
        quad: Vec<Vec<Vec<Rational>>>,
        shift: Vec<Rational>,
        domain: RationalBox,
    ) -> Result<Self> {
        let k = domain.dim();
        check_dim(k, shift.len())?;
        let square = |m: &Vec<Vec<Rational>>| m.len() == k && m.iter().all(|r| r.len() == k);
        if linear.len() != k || !square(&linear) {
            return Err(Error::InvalidInput("linear part must be k×k".into()));
        }
        if quad.len() != k || !quad.iter().all(square) {
            return Err(Error::InvalidInput("quadratic part must be k matrices of size k×k".into()));
        }
        if quad.iter().any(|q| (0..k).any(|j| (0..j).any(|l| q[j][l] != q[l][j]))) {
            return Err(Error::InvalidInput("quadratic parts must be symmetric".into()));
        }
        let iv = |m: &Vec<Vec<Rational>>| -> Vec<Vec<Interval>> {
            m.iter().map(|r| r.iter().map(Interval::from_rational).collect()).collect()
        };
        let quad_iv: Vec<Vec<Vec<Interval>>> = quad.iter().map(iv).collect();
        let c1_sq = quad_iv.iter().flatten().flatten().filter(|q| **q != Interval::ZERO).fold(Interval::ZERO, |s, q| s + (*q * 2.0).sqr());
        let c1 = if c1_sq == Interval::ZERO { 0.0 } else { c1_sq.hi.sqrt().next_up() };
        let domain_iv = domain
            .lower()
            .iter()
            .zip(domain.upper())
            .map(|(l, u)| Interval::new(Interval::from_rational(l).lo, Interval::from_rational(u).hi))
            .collect();
        let mut map = QuadraticMap {
            linear: iv(&linear),
            quad: quad_iv,
            shift: shift.iter().map(Interval::from_rational).collect(),
            domain: domain_iv,
            c0: f64::INFINITY,
            c1,
            lip: f64::INFINITY,
        };
        let (c0, lip) = map.certify()?;
        map.c0 = c0;
        map.lip = lip;
        Ok(map)
    }

    /// `x ↦ M·x + t`.
    pub fn affine(matrix: Vec<Vec<Rational>>, shift: Vec<Rational>, domain: RationalBox) -> Result<Self> {
        let k = shift.len();
        QuadraticMap::new(matrix, vec![vec![vec![int(0); k]; k]; k], shift, domain)
    }

    /// `(x, y) ↦ (x, y + x²)`.
    pub fn shear_parabola(domain: RationalBox) -> Result<Self> {
        let id = vec![vec![int(1), int(0)], vec![int(0), int(1)]];
        let zero = vec![vec![int(0), int(0)], vec![int(0), int(0)]];
        let sq = vec![vec![int(1), int(0)], vec![int(0), int(0)]];
        QuadraticMap::new(id, vec![zero, sq], vec![int(0), int(0)], domain)
    }

    fn jacobian(&self, x: &[Interval]) -> Vec<Vec<Interval>> {
        let k = x.len();
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        (0..k).fold(self.linear[i][j], |s, l| {
                            let q = self.quad[i][j][l];
                            if q == Interval::ZERO {
                                s
                            } else {
                                s + q * x[l] * 2.0
                            }
                        })
                    })
                    .collect()
            })
            .collect()
    }

    /// Bounds `‖Φ'⁻¹‖` by a preconditioned Neumann series on each grid cell.
    fn certify(&self) -> Result<(f64, f64)> {
        let k = self.domain.len();
        let per = ((GRID_CELLS as f64).powf(1.0 / k as f64)).floor().max(1.0) as usize;
        let (mut c0, mut lip) = (0.0f64, 0.0f64);
        for cell_idx in 0..per.pow(k as u32) {
            let cell: Vec<Interval> = (0..k)
                .map(|i| {
                    let j = cell_idx / per.pow(i as u32) % per;
                    let d = self.domain[i];
                    let w = (d.hi - d.lo) / per as f64;
                    let lo = if j == 0 { d.lo } else { (d.lo + w * j as f64).next_down() };
                    let hi = if j + 1 == per { d.hi } else { (d.lo + w * (j + 1) as f64).next_up() };
                    Interval::new(lo, hi)
                })
                .collect();
            let jac = self.jacobian(&cell);
            let mid: Vec<Vec<f64>> = jac.iter().map(|r| r.iter().map(Interval::mid).collect()).collect();
            let m = invert_f64(&mid).ok_or_else(|| Error::InvalidInput("map is singular on its domain".into()))?;
            // ‖I − M·J‖_F
            let mut resid = Interval::ZERO;
            for i in 0..k {
                for j in 0..k {
                    let mut e = Interval::point(if i == j { 1.0 } else { 0.0 });
                    for (l, row) in jac.iter().enumerate() {
                        e = e - row[j] * m[i][l];
                    }
                    resid = resid + Interval::point(e.mag()).sqr();
                }
            }
            let q = resid.hi.sqrt().next_up();
            if q >= 1.0 {
                return Err(Error::InvalidInput("derivative inverse not certifiable on the domain grid".into()));
            }
            let m_norm = m.iter().flatten().fold(Interval::ZERO, |s, v| s + Interval::point(*v).sqr()).hi.sqrt().next_up();
            c0 = c0.max((Interval::point(m_norm) * Interval::point(1.0 - q).recip().expect("q < 1")).hi);
            let j_norm = jac.iter().flatten().fold(Interval::ZERO, |s, v| s + Interval::point(v.mag()).sqr()).hi.sqrt();
            lip = lip.max(j_norm.next_up());
        }
        Ok((c0, lip))
    }
}

impl IntervalMap for QuadraticMap {
    fn source_dim(&self) -> usize {
        self.domain.len()
    }
    fn target_dim(&self) -> usize {
        self.shift.len()
    }
    fn eval(&self, u: &[f64]) -> Vec<f64> {
        let k = u.len();
        (0..self.target_dim())
            .map(|i| {
                let mut s = self.shift[i].mid();
                for j in 0..k {
                    s += self.linear[i][j].mid() * u[j];
                    for l in 0..k {
                        s += self.quad[i][j][l].mid() * u[j] * u[l];
                    }
                }
                s
            })
            .collect()
    }
    fn eval_box(&self, bx: &[Interval]) -> Vec<Interval> {
        let k = bx.len();
        // support lies in the domain, so clamping loses no mass
        let bx: Vec<Interval> =
            bx.iter().zip(&self.domain).map(|(b, d)| Interval::new(b.lo.max(d.lo), b.hi.min(d.hi).max(b.lo.max(d.lo)))).collect();
        (0..self.target_dim())
            .map(|i| {
                let mut s = self.shift[i];
                for j in 0..k {
                    if self.linear[i][j] != Interval::ZERO {
                        s = s + self.linear[i][j] * bx[j];
                    }
                    let q = self.quad[i][j][j];
                    if q != Interval::ZERO {
                        s = s + q * bx[j].sqr();
                    }
                    for l in 0..j {
                        let q = self.quad[i][j][l];
                        if q != Interval::ZERO {
                            s = s + q * bx[j] * bx[l] * 2.0;
                        }
                    }
                }
                s
            })
            .collect()
    }
    fn lipschitz(&self) -> f64 {
        self.lip
    }
    fn domain(&self) -> Option<Vec<Interval>> {
        Some(self.domain.clone())
    }
}

impl NonsingularMap for QuadraticMap {
    fn c0(&self) -> f64 {
        self.c0
    }
    fn c1(&self) -> f64 {
        self.c1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn unit() -> RationalBox {
        RationalBox::new(vec![int(0), int(0)], vec![int(1), int(1)]).unwrap()
    }

    #[test]
    fn shear_bounds() {
        let phi = QuadraticMap::shear_parabola(unit()).unwrap();
        // Φ'⁻¹ = [[1, 0], [−2x, 1]], Frobenius norm sqrt(2 + 4x²) <= sqrt 6
        assert!(phi.c0() >= 6f64.sqrt() && phi.c0() < 6f64.sqrt() * 1.05, "{}", phi.c0());
        assert!((phi.c1() - 2.0).abs() < 1e-12);
        assert!(phi.rho_cap() < 1.0 / (2.0 * 6f64.sqrt() * 2.0));
        let y = phi.eval(&[0.5, 0.25]);
        assert_eq!(y, vec![0.5, 0.5]);
        let bx = phi.eval_box(&[Interval::new(0.5, 0.6), Interval::new(0.0, 0.1)]);
        assert!(bx[1].contains(0.25) && bx[1].contains(0.46));
    }

    #[test]
    fn affine_has_no_curvature() {
        let m = vec![vec![int(0), int(1)], vec![int(2), int(0)]];
        let phi = QuadraticMap::affine(m, vec![int(1), rat(-1, 2)], unit()).unwrap();
        assert_eq!(phi.c1(), 0.0);
        assert_eq!(phi.rho_cap(), f64::INFINITY);
        assert_eq!(phi.eval(&[0.25, 0.5]), vec![1.5, 0.0]);
        let singular = vec![vec![int(1), int(1)], vec![int(1), int(1)]];
        assert!(QuadraticMap::affine(singular, vec![int(0), int(0)], unit()).is_err());
    }
}
