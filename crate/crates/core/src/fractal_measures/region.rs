//! Geometric predicates with a conservative trichotomy on axis-aligned boxes.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact::{to_f64, Rational};
use crate::interval::Interval;
use crate::rational_geometry::linalg::rank;
use crate::rational_geometry::QuadraticHypersurface;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Outside,
    Unknown,
}

/// A set `S ⊂ R^k`. `classify` may answer `Unknown` freely but must never be wrong otherwise.
pub trait Region {
    fn dim(&self) -> usize;
    fn classify(&self, bx: &[Interval]) -> Containment;
    /// Smallest geometric feature, used to pick a recursion depth.
    fn scale(&self) -> f64;
}

impl<R: Region + ?Sized> Region for Box<R> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn classify(&self, bx: &[Interval]) -> Containment {
        (**self).classify(bx)
    }
    fn scale(&self) -> f64 {
        (**self).scale()
    }
}

impl<R: Region + ?Sized> Region for &R {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn classify(&self, bx: &[Interval]) -> Containment {
        (**self).classify(bx)
    }
    fn scale(&self) -> f64 {
        (**self).scale()
    }
}

fn expand(bx: &[Interval], w: f64) -> Vec<Interval> {
    bx.iter().map(|i| Interval::new((i.lo - w).next_down(), (i.hi + w).next_up())).collect()
}

fn up(x: f64) -> f64 {
    x.next_up()
}

/// All of `R^k`.
#[derive(Clone, Debug)]
pub struct Whole(pub usize);

impl Region for Whole {
    fn dim(&self) -> usize {
        self.0
    }
    fn classify(&self, _: &[Interval]) -> Containment {
        Containment::Inside
    }
    fn scale(&self) -> f64 {
        f64::INFINITY
    }
}

#[derive(Clone, Debug)]
pub struct Empty(pub usize);

impl Region for Empty {
    fn dim(&self) -> usize {
        self.0
    }
    fn classify(&self, _: &[Interval]) -> Containment {
        Containment::Outside
    }
    fn scale(&self) -> f64 {
        f64::INFINITY
    }
}

/// Closed Euclidean ball.
#[derive(Clone, Debug)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("bad ball radius {radius}")));
        }
        Ok(Ball { center, radius })
    }
}

impl Region for Ball {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn classify(&self, bx: &[Interval]) -> Containment {
        let d2 = bx
            .iter()
            .zip(&self.center)
            .fold(Interval::ZERO, |acc, (x, &c)| acc + (*x - Interval::point(c)).sqr());
        let r2 = Interval::point(self.radius).sqr();
        if d2.hi <= r2.lo {
            Containment::Inside
        } else if d2.lo > r2.hi {
            Containment::Outside
        } else {
            Containment::Unknown
        }
    }
    fn scale(&self) -> f64 {
        self.radius
    }
}

/// Closed axis-aligned box.
#[derive(Clone, Debug)]
pub struct AxisBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Region for AxisBox {
    fn dim(&self) -> usize {
        self.lower.len()
    }
    fn classify(&self, bx: &[Interval]) -> Containment {
        let mut inside = true;
        for (i, x) in bx.iter().enumerate() {
            if x.hi < self.lower[i] || x.lo > self.upper[i] {
                return Containment::Outside;
            }
            inside &= self.lower[i] <= x.lo && x.hi <= self.upper[i];
        }
        if inside {
            Containment::Inside
        } else {
            Containment::Unknown
        }
    }
    fn scale(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).fold(f64::INFINITY, f64::min).max(f64::MIN_POSITIVE)
    }
}

/// `{x : |⟨n, x⟩ − t| <= w·‖n‖}`, the `w`-thickening of a hyperplane.
#[derive(Clone, Debug)]
pub struct HyperplaneSlab {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub half_width: f64,
}

impl HyperplaneSlab {
    pub fn new(normal: Vec<f64>, offset: f64, half_width: f64) -> Result<Self> {
        if normal.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidInput("hyperplane normal is zero".into()));
        }
        if !(half_width >= 0.0) {
            return Err(Error::InvalidInput("negative slab width".into()));
        }
        Ok(HyperplaneSlab { normal, offset, half_width })
    }

    fn signed_distance(&self, bx: &[Interval]) -> Interval {
        let dot = bx
            .iter()
            .zip(&self.normal)
            .fold(Interval::point(-self.offset), |acc, (x, &n)| if n == 0.0 { acc } else { acc + *x * n });
        let nn = self.normal.iter().fold(Interval::ZERO, |acc, &n| acc + Interval::point(n).sqr());
        let norm = nn.sqrt().expect("nonnegative");
        dot.div(norm).expect("nonzero normal")
    }
}

impl Region for HyperplaneSlab {
    fn dim(&self) -> usize {
        self.normal.len()
    }
    fn classify(&self, bx: &[Interval]) -> Containment {
        let v = self.signed_distance(bx);
        if v.mag() <= self.half_width {
            Containment::Inside
        } else if v.mig() > self.half_width {
            Containment::Outside
        } else {
            Containment::Unknown
        }
    }
    fn scale(&self) -> f64 {
        self.half_width
    }
}

/// Real quadratic polynomial `xᵀAx + bᵀx + c` with rational coefficients.
#[derive(Clone, Debug)]
pub struct RealQuadric {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    c: Rational,
    af: Vec<Vec<f64>>,
    bf: Vec<f64>,
    cf: f64,
}

impl RealQuadric {
    pub fn new(a: Vec<Vec<Rational>>, b: Vec<Rational>, c: Rational) -> Result<Self> {
        let k = b.len();
        if k == 0 || a.len() != k || a.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput("quadratic part must be a k×k matrix".into()));
        }
        for i in 0..k {
            for j in 0..i {
                if a[i][j] != a[j][i] {
                    return Err(Error::InvalidInput("quadratic part is not symmetric".into()));
                }
            }
        }
        let af = a.iter().map(|r| r.iter().map(to_f64).collect()).collect();
        let bf = b.iter().map(to_f64).collect();
        let cf = to_f64(&c);
        Ok(RealQuadric { a, b, c, af, bf, cf })
    }

    pub fn from_integral(z: &QuadraticHypersurface) -> Self {
        let (a, b, c) = z.to_rational_parts();
        RealQuadric::new(a, b, c).expect("integral quadric is valid")
    }

    /// `x_1² + … + x_k² = radius_sq`, centered at `center`.
    pub fn sphere(center: &[Rational], radius_sq: Rational) -> Self {
        let k = center.len();
        let a = (0..k).map(|i| (0..k).map(|j| Rational::from_integer(u8::from(i == j).into())).collect()).collect();
        let b = center.iter().map(|c| -c * Rational::from_integer(2.into())).collect();
        let c = center.iter().map(|c| c * c).sum::<Rational>() - radius_sq;
        RealQuadric::new(a, b, c).expect("sphere is valid")
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn parts(&self) -> (&[Vec<Rational>], &[Rational], &Rational) {
        (&self.a, &self.b, &self.c)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let k = self.dim();
        let mut s = self.cf;
        for i in 0..k {
            let row: f64 = (0..k).map(|j| self.af[i][j] * x[j]).sum();
            s += x[i] * row + self.bf[i] * x[i];
        }
        s
    }

    pub fn gradient_f64(&self, x: &[f64]) -> Vec<f64> {
        let k = self.dim();
        (0..k).map(|i| (0..k).map(|j| 2.0 * self.af[i][j] * x[j]).sum::<f64>() + self.bf[i]).collect()
    }

    pub fn eval_interval(&self, x: &[Interval]) -> Interval {
        let k = self.dim();
        let mut acc = Interval::point(self.cf);
        for i in 0..k {
            if self.af[i][i] != 0.0 {
                acc = acc + x[i].sqr() * self.af[i][i];
            }
            for j in 0..i {
                if self.af[i][j] != 0.0 {
                    acc = acc + x[i] * x[j] * (2.0 * self.af[i][j]);
                }
            }
            if self.bf[i] != 0.0 {
                acc = acc + x[i] * self.bf[i];
            }
        }
        acc
    }

    pub fn gradient_interval(&self, x: &[Interval]) -> Vec<Interval> {
        let k = self.dim();
        (0..k)
            .map(|i| {
                (0..k).fold(Interval::point(self.bf[i]), |s, j| {
                    if self.af[i][j] == 0.0 {
                        s
                    } else {
                        s + x[j] * (2.0 * self.af[i][j])
                    }
                })
            })
            .collect()
    }

    /// The `(k+1)×(k+1)` matrix of the homogenized form.
    pub fn homogenized(&self) -> Vec<Vec<Rational>> {
        let k = self.dim();
        let half = Rational::new(1.into(), 2.into());
        let mut h = vec![vec![Rational::zero(); k + 1]; k + 1];
        for i in 0..k {
            for j in 0..k {
                h[i][j] = self.a[i][j].clone();
            }
            h[i][k] = &self.b[i] * &half;
            h[k][i] = &self.b[i] * &half;
        }
        h[k][k] = self.c.clone();
        h
    }

    /// The `w`-thickening of the zero set, with explicit fallbacks for degenerate forms:
    /// a double hyperplane becomes one slab and a pair of crossing hyperplanes becomes a union of two.
    pub fn slab(&self, w: f64) -> Result<Box<dyn Region + Send + Sync>> {
        if !(w >= 0.0) {
            return Err(Error::InvalidInput("negative slab width".into()));
        }
        let k = self.dim();
        let h = self.homogenized();
        let quad_zero = self.a.iter().flatten().all(Zero::is_zero);
        let lin_zero = self.b.iter().all(Zero::is_zero);
        if quad_zero && lin_zero {
            return Ok(if self.c.is_zero() { Box::new(Whole(k)) } else { Box::new(Empty(k)) });
        }
        if quad_zero {
            return Ok(Box::new(HyperplaneSlab::new(self.bf.clone(), -self.cf, w)?));
        }
        match rank(h.clone()) {
            1 => {
                // H = λ·ℓℓᵀ, so any nonzero row is proportional to ℓ = (n, n0)
                let row = h.iter().find(|r| r.iter().any(|v| !v.is_zero())).expect("rank one");
                let normal: Vec<f64> = row[..k].iter().map(to_f64).collect();
                if normal.iter().all(|&v| v == 0.0) {
                    return Ok(Box::new(Empty(k)));
                }
                Ok(Box::new(HyperplaneSlab::new(normal, -to_f64(&row[k]), w)?))
            }
            2 => {
                let hf: Vec<Vec<f64>> = h.iter().map(|r| r.iter().map(to_f64).collect()).collect();
                let (vals, vecs) = jacobi_eigen(&hf);
                let mut idx: Vec<usize> = (0..=k).collect();
                idx.sort_by(|&i, &j| vals[j].abs().total_cmp(&vals[i].abs()));
                let (i1, i2) = (idx[0], idx[1]);
                if vals[i1].signum() == vals[i2].signum() {
                    return Ok(Box::new(QuadricSlab::new(self.clone(), w)));
                }
                let (p, n) = if vals[i1] > 0.0 { (i1, i2) } else { (i2, i1) };
                let sp = vals[p].sqrt();
                let sn = (-vals[n]).sqrt();
                let mut parts: Vec<Box<dyn Region + Send + Sync>> = Vec::new();
                for s in [1.0, -1.0] {
                    let l: Vec<f64> = (0..=k).map(|r| sp * vecs[r][p] + s * sn * vecs[r][n]).collect();
                    if l[..k].iter().any(|&v| v != 0.0) {
                        parts.push(Box::new(HyperplaneSlab::new(l[..k].to_vec(), -l[k], w)?));
                    }
                }
                Ok(Box::new(Union(parts)))
            }
            _ => Ok(Box::new(QuadricSlab::new(self.clone(), w))),
        }
    }

    /// Whether the zero set is a double hyperplane or a crossing pair.
    pub fn is_degenerate(&self) -> bool {
        rank(self.homogenized()) <= 2
    }
}

/// Cyclic Jacobi eigen-decomposition of a small symmetric matrix; eigenvectors are the columns.
pub(crate) fn jacobi_eigen(m: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.len();
    let mut a = m.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// `{x : dist(x, Z) <= w}` for a quadric zero set `Z`.
///
/// Outside when `0 ∉ P(box ⊕ w)` or `inf|P(box)| > w·sup‖∇P‖` over `box ⊕ w`. Inside when, along the
/// unit gradient direction `u` at the box center, `∇P·u >= D > 0` on `box ⊕ w` and `sup|P(box)| <= D·w`.
#[derive(Clone, Debug)]
pub struct QuadricSlab {
    pub quadric: RealQuadric,
    pub half_width: f64,
}

impl QuadricSlab {
    pub fn new(quadric: RealQuadric, half_width: f64) -> Self {
        QuadricSlab { quadric, half_width }
    }
}

impl Region for QuadricSlab {
    fn dim(&self) -> usize {
        self.quadric.dim()
    }
    fn classify(&self, bx: &[Interval]) -> Containment {
        let w = self.half_width;
        let big = expand(bx, w);
        if !self.quadric.eval_interval(&big).contains_zero() {
            return Containment::Outside;
        }
        let p = self.quadric.eval_interval(bx);
        let g = self.quadric.gradient_interval(&big);
        let gsup = up(g.iter().fold(Interval::ZERO, |acc, gi| acc + Interval::point(gi.mag()).sqr()).hi.sqrt());
        if p.mig() > (Interval::point(w) * Interval::point(gsup)).hi {
            return Containment::Outside;
        }
        let center: Vec<f64> = bx.iter().map(Interval::mid).collect();
        let gc = self.quadric.gradient_f64(&center);
        let norm = gc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Containment::Unknown;
        }
        let dlo = g.iter().zip(&gc).fold(Interval::ZERO, |acc, (gi, &ci)| acc + *gi * (ci / norm)).lo;
        // ‖u‖ may exceed 1 by rounding; shrink the certified slope accordingly
        let dlo = dlo * (1.0 - 4.0 * f64::EPSILON);
        if dlo > 0.0 && p.mag() <= (Interval::point(dlo) * Interval::point(w)).lo {
            return Containment::Inside;
        }
        Containment::Unknown
    }
    fn scale(&self) -> f64 {
        self.half_width
    }
}

/// Finite intersection.
pub struct Intersection(pub Vec<Box<dyn Region + Send + Sync>>);

impl Region for Intersection {
    fn dim(&self) -> usize {
        self.0.first().map_or(0, |r| r.dim())
    }
    fn classify(&self, bx: &[Interval]) -> Containment {
        let mut all_inside = true;
        for r in &self.0 {
            match r.classify(bx) {
                Containment::Outside => return Containment::Outside,
                Containment::Unknown => all_inside = false,
                Containment::Inside => {}
            }
        }
        if all_inside {
            Containment::Inside
        } else {
            Containment::Unknown
        }
    }
    fn scale(&self) -> f64 {
        self.0.iter().map(|r| r.scale()).fold(f64::INFINITY, f64::min)
    }
}

/// Finite union.
pub struct Union(pub Vec<Box<dyn Region + Send + Sync>>);

impl Region for Union {
    fn dim(&self) -> usize {
        self.0.first().map_or(0, |r| r.dim())
    }
    fn classify(&self, bx: &[Interval]) -> Containment {
        let mut all_outside = true;
        for r in &self.0 {
            match r.classify(bx) {
                Containment::Inside => return Containment::Inside,
                Containment::Unknown => all_outside = false,
                Containment::Outside => {}
            }
        }
        if all_outside {
            Containment::Outside
        } else {
            Containment::Unknown
        }
    }
    fn scale(&self) -> f64 {
        self.0.iter().map(|r| r.scale()).fold(f64::INFINITY, f64::min)
    }
}

/// Convenience: `ball ∩ slab`.
pub fn ball_and(ball: Ball, other: Box<dyn Region + Send + Sync>) -> Intersection {
    Intersection(vec![Box::new(ball), other])
}
