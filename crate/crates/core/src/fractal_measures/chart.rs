//! Maps with interval enclosures, linear-inverse charts onto quadrics, and pushforward measures.

use rand::RngCore;

use super::region::{Containment, RealQuadric, Region};
use super::{Depth, MassInterval, MeasureHandle, SelfSimilarMeasure};
use crate::error::{check_dim, Error, Result};
use crate::exact::{to_f64, Rational};
use crate::interval::Interval;
use crate::rational_geometry::{QuadraticHypersurface, RationalBox};

/// A map `R^k → R^m` with a conservative image enclosure for boxes.
pub trait IntervalMap {
    fn source_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    fn eval(&self, u: &[f64]) -> Vec<f64>;
    fn eval_box(&self, bx: &[Interval]) -> Vec<Interval>;
    /// Upper bound for the Lipschitz constant on the domain.
    fn lipschitz(&self) -> f64;
    /// Box on which the map is defined, when restricted.
    fn domain(&self) -> Option<Vec<Interval>> {
        None
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IdentityMap(pub usize);

impl IntervalMap for IdentityMap {
    fn source_dim(&self) -> usize {
        self.0
    }
    fn target_dim(&self) -> usize {
        self.0
    }
    fn eval(&self, u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }
    fn eval_box(&self, bx: &[Interval]) -> Vec<Interval> {
        bx.to_vec()
    }
    fn lipschitz(&self) -> f64 {
        1.0
    }
}

/// `Ψ: U ⊂ R^{d−1} → Z`, solving the quadric for coordinate `eliminated` on a fixed sign branch.
/// The inverse drops that coordinate.
#[derive(Clone, Debug)]
pub struct Chart {
    quadric: RealQuadric,
    eliminated: usize,
    sign: i8,
    domain: RationalBox,
    dom_iv: Vec<Interval>,
    // coefficient of x_e²
    a: f64,
    lip_upper: f64,
}

const CERT_CELLS: usize = 4096;

impl Chart {
    /// Certifies on a grid over `domain` that the discriminant is positive, so `Ψ(U) ⊂ Z_reg`.
    pub fn new(quadric: RealQuadric, eliminated: usize, sign: i8, domain: RationalBox) -> Result<Self> {
        let d = quadric.dim();
        if d < 2 {
            return Err(Error::InvalidInput("charts need d >= 2".into()));
        }
        check_dim(d - 1, domain.dim())?;
        if eliminated >= d {
            return Err(Error::InvalidInput(format!("coordinate {eliminated} out of range")));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidInput("sign branch must be ±1".into()));
        }
        let (qa, _, _) = quadric.parts();
        let a = to_f64(&qa[eliminated][eliminated]);
        let dom_iv: Vec<Interval> = domain
            .lower()
            .iter()
            .zip(domain.upper())
            .map(|(l, u)| Interval::new(Interval::from_rational(l).lo, Interval::from_rational(u).hi))
            .collect();
        let mut chart = Chart { quadric, eliminated, sign, domain, dom_iv, a, lip_upper: f64::INFINITY };
        chart.lip_upper = chart.certify()?;
        Ok(chart)
    }

    /// Upper half of the unit circle over `[−lim, lim]`.
    pub fn upper_circle(lim: Rational) -> Result<Self> {
        let z = QuadraticHypersurface::unit_sphere(2);
        let dom = RationalBox::new(vec![-lim.clone()], vec![lim])?;
        Chart::new(RealQuadric::from_integral(&z), 1, 1, dom)
    }

    /// Upper hemisphere of the unit 2-sphere over `[−lim, lim]²`.
    pub fn upper_hemisphere(lim: Rational) -> Result<Self> {
        let z = QuadraticHypersurface::unit_sphere(3);
        let dom = RationalBox::new(vec![-lim.clone(), -lim.clone()], vec![lim.clone(), lim])?;
        Chart::new(RealQuadric::from_integral(&z), 2, 1, dom)
    }

    pub fn quadric(&self) -> &RealQuadric {
        &self.quadric
    }

    pub fn eliminated(&self) -> usize {
        self.eliminated
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn domain_box(&self) -> &RationalBox {
        &self.domain
    }

    /// Lower bound for `‖Ψ(a) − Ψ(b)‖ / ‖a − b‖`; the inverse is a coordinate projection.
    pub fn lip_lower(&self) -> f64 {
        1.0
    }

    /// `L`, the linear left inverse.
    pub fn inverse(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().filter(|&(i, _)| i != self.eliminated).map(|(_, v)| *v).collect()
    }

    /// Coefficients of `P` as a polynomial in `x_e`: `a·x_e² + B(u)·x_e + C(u)`.
    fn split(&self, u: &[Interval]) -> (Interval, Interval) {
        let e = self.eliminated;
        let mut x = Vec::with_capacity(u.len() + 1);
        x.extend_from_slice(&u[..e]);
        x.push(Interval::ZERO);
        x.extend_from_slice(&u[e..]);
        let c = self.quadric.eval_interval(&x);
        let b = self.quadric.gradient_interval(&x)[e];
        (b, c)
    }

    fn solve(&self, u: &[Interval]) -> Option<Interval> {
        let (b, c) = self.split(u);
        if self.a == 0.0 {
            return (-c).div(b);
        }
        let disc = b.sqr() - c * (4.0 * self.a);
        if disc.hi < 0.0 {
            return None;
        }
        // disc > 0 on U is certified; clip the dependency overshoot
        let root = Interval::new(disc.lo.max(0.0), disc.hi).sqrt()?;
        let num = if self.sign > 0 { root - b } else { -root - b };
        num.div(Interval::point(2.0 * self.a))
    }

    fn certify(&self) -> Result<f64> {
        let k = self.dom_iv.len();
        let per = ((CERT_CELLS as f64).powf(1.0 / k as f64)).floor().max(1.0) as usize;
        let mut lip2 = 0.0f64;
        let mut idx = vec![0usize; k];
        loop {
            let cell: Vec<Interval> = (0..k)
                .map(|i| {
                    let d = self.dom_iv[i];
                    let w = (d.hi - d.lo) / per as f64;
                    let lo = if idx[i] == 0 { d.lo } else { (d.lo + w * idx[i] as f64).next_down() };
                    let hi = if idx[i] + 1 == per { d.hi } else { (d.lo + w * (idx[i] + 1) as f64).next_up() };
                    Interval::new(lo, hi)
                })
                .collect();
            let (b, c) = self.split(&cell);
            let slope = if self.a == 0.0 {
                if b.contains_zero() {
                    return Err(Error::InvalidInput("chart is singular on its domain".into()));
                }
                b.mig()
            } else {
                let disc = b.sqr() - c * (4.0 * self.a);
                if disc.lo <= 0.0 {
                    return Err(Error::InvalidInput("discriminant not certified positive on the chart domain".into()));
                }
                // |∂P/∂x_e| = sqrt(disc) on the chosen branch
                disc.sqrt().expect("positive").lo
            };
            let xe = self.solve(&cell).expect("certified");
            let full = self.insert(&cell, xe);
            let g = self.quadric.gradient_interval(&full);
            let num = g.iter().enumerate().filter(|&(i, _)| i != self.eliminated).fold(0.0f64, |s, (_, gi)| s + gi.mag().powi(2));
            lip2 = lip2.max((num / (slope * slope)).next_up());
            let mut i = 0;
            while i < k {
                idx[i] += 1;
                if idx[i] < per {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == k {
                break;
            }
        }
        Ok((1.0 + lip2).sqrt().next_up())
    }

    fn insert(&self, u: &[Interval], xe: Interval) -> Vec<Interval> {
        let e = self.eliminated;
        let mut x = Vec::with_capacity(u.len() + 1);
        x.extend_from_slice(&u[..e]);
        x.push(xe);
        x.extend_from_slice(&u[e..]);
        x
    }

    fn clamp(&self, bx: &[Interval]) -> Option<Vec<Interval>> {
        bx.iter()
            .zip(&self.dom_iv)
            .map(|(b, d)| {
                let (lo, hi) = (b.lo.max(d.lo), b.hi.min(d.hi));
                (lo <= hi).then(|| Interval::new(lo, hi))
            })
            .collect()
    }
}

impl IntervalMap for Chart {
    fn source_dim(&self) -> usize {
        self.dom_iv.len()
    }
    fn target_dim(&self) -> usize {
        self.dom_iv.len() + 1
    }
    fn eval(&self, u: &[f64]) -> Vec<f64> {
        let iv: Vec<Interval> = u.iter().map(|&v| Interval::point(v)).collect();
        let xe = self.solve(&iv).map_or(f64::NAN, |i| i.mid());
        self.insert(&iv, Interval::point(xe)).iter().map(Interval::mid).collect()
    }
    fn eval_box(&self, bx: &[Interval]) -> Vec<Interval> {
        // the measure lives in U, so only the part of the box inside U matters
        match self.clamp(bx).and_then(|c| self.solve(&c).map(|xe| self.insert(&c, xe))) {
            Some(v) => v,
            None => vec![Interval::new(f64::MAX, f64::MAX); self.target_dim()],
        }
    }
    fn lipschitz(&self) -> f64 {
        self.lip_upper
    }
    fn domain(&self) -> Option<Vec<Interval>> {
        Some(self.dom_iv.clone())
    }
}

/// `{u : F(u) ∈ S}`.
pub struct Preimage<'a> {
    pub region: &'a dyn Region,
    pub map: &'a dyn IntervalMap,
}

impl Region for Preimage<'_> {
    fn dim(&self) -> usize {
        self.map.source_dim()
    }
    fn classify(&self, bx: &[Interval]) -> Containment {
        self.region.classify(&self.map.eval_box(bx))
    }
    fn scale(&self) -> f64 {
        self.region.scale() / self.map.lipschitz().max(1.0)
    }
}

/// `F[μ]`, answering queries through preimages.
#[derive(Clone, Debug)]
pub struct Pushforward<F> {
    mu: SelfSimilarMeasure,
    map: F,
}

impl<F: IntervalMap> Pushforward<F> {
    /// Fails when the attractor box of `mu` leaves the domain of `map`.
    pub fn new(mu: SelfSimilarMeasure, map: F) -> Result<Self> {
        check_dim(map.source_dim(), mu.dim())?;
        if let Some(dom) = map.domain() {
            let hull = mu.attractor_box();
            if hull.iter().zip(&dom).any(|(h, d)| h.lo < d.lo || h.hi > d.hi) {
                return Err(Error::InvalidInput("attractor escapes the chart domain".into()));
            }
        }
        Ok(Pushforward { mu, map })
    }

    pub fn source(&self) -> &SelfSimilarMeasure {
        &self.mu
    }

    pub fn map(&self) -> &F {
        &self.map
    }
}

impl<F: IntervalMap> MeasureHandle for Pushforward<F> {
    fn ambient_dim(&self) -> usize {
        self.map.target_dim()
    }

    fn measure(&self, region: &dyn Region, depth: Depth) -> Result<MassInterval> {
        check_dim(self.ambient_dim(), region.dim())?;
        let pre = Preimage { region, map: &self.map };
        self.mu.measure_of_set(&pre, depth)
    }

    fn sample_support(&self, rng: &mut dyn RngCore) -> (Vec<u8>, Vec<f64>) {
        let (w, u) = self.mu.sample_support(rng);
        (w, self.map.eval(&u))
    }

    fn point_of_word(&self, word: &[u8]) -> Vec<f64> {
        self.map.eval(&self.mu.point_of_word(word))
    }

    fn rho0(&self) -> f64 {
        self.mu.rho0() * self.map.lipschitz()
    }

    fn common_ratio(&self) -> Option<f64> {
        self.mu.common_ratio()
    }

    fn delta_exact(&self) -> Option<f64> {
        self.mu.delta_exact()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::fractal_measures::region::{AxisBox, Whole};
    use rand::SeedableRng;

    #[test]
    fn circle_chart() {
        let ch = Chart::upper_circle(rat(7, 10)).unwrap();
        let x = ch.eval(&[0.6]);
        assert!((x[0] - 0.6).abs() < 1e-15 && (x[1] - 0.8).abs() < 1e-15);
        assert_eq!(ch.inverse(&x), vec![0.6]);
        // |dy/dx| = 0.7/sqrt(0.51) at the edge
        let exact = (1.0 + 0.49 / 0.51f64).sqrt();
        assert!(ch.lipschitz() >= exact && ch.lipschitz() < exact * 1.05);
        let bx = ch.eval_box(&[Interval::new(0.5, 0.6)]);
        assert!(bx[1].contains(0.8) && bx[1].contains(0.75f64.sqrt()));
        assert!(Chart::upper_circle(rat(1, 1)).is_err());
    }

    #[test]
    fn chart_is_bi_lipschitz_on_samples() {
        let ch = Chart::upper_hemisphere(rat(1, 2)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        use rand::Rng;
        for _ in 0..200 {
            let a: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let b: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let (pa, pb) = (ch.eval(&a), ch.eval(&b));
            let num: f64 = pa.iter().zip(&pb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let den: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!(num >= ch.lip_lower() * den * (1.0 - 1e-12) && num <= ch.lipschitz() * den * (1.0 + 1e-12));
            assert!(pa.iter().map(|v| v * v).sum::<f64>() - 1.0 < 1e-14);
        }
    }

    #[test]
    fn pushforward_preserves_cylinder_masses() {
        let mu = SelfSimilarMeasure::centered_cantor();
        let nu = Pushforward::new(mu.clone(), Chart::upper_circle(rat(7, 10)).unwrap()).unwrap();
        assert_eq!(nu.measure(&Whole(2), Depth::Fixed(4)).unwrap(), MassInterval { lower: 1.0, upper: 1.0 });
        // the image of the right depth-1 cylinder [1/5, 3/5] is cut out by x >= 0
        let right = AxisBox { lower: vec![0.0, -2.0], upper: vec![2.0, 2.0] };
        let m = nu.measure(&right, Depth::Fixed(3)).unwrap();
        assert_eq!((m.lower, m.upper), (0.5, 0.5));
        let escaping = Chart::upper_circle(rat(1, 2)).unwrap();
        assert!(Pushforward::new(mu, escaping).is_err());
    }

    #[test]
    fn identity_pushforward_is_bit_exact() {
        let mu = SelfSimilarMeasure::cantor_square();
        let nu = Pushforward::new(mu.clone(), IdentityMap(2)).unwrap();
        let b = super::super::Ball::new(vec![0.3, 0.1], 0.2).unwrap();
        assert_eq!(nu.measure(&b, Depth::Fixed(7)).unwrap(), mu.measure_of_set(&b, Depth::Fixed(7)).unwrap());
    }
}
