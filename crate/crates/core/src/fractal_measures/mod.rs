//! Self-similar measures, certified cylinder recursion, and pushforwards onto quadrics.

mod chart;
mod fit;
pub mod region;

pub use chart::{Chart, IdentityMap, IntervalMap, Preimage, Pushforward};
pub use fit::{
    check_federer, commensurate_scales, decay_profile, decay_rows, fit_ahlfors_delta, fit_decay_alpha, fit_envelope,
    support_balls, AhlforsFit, BallRow, DecayFit, DecayProfile, DecayRow, EnvelopePoint, HyperplaneSampler, ObstacleFn,
};
pub(crate) use fit::{check_eps, ratio_row};
pub use region::{Ball, Containment, Region};

use num_traits::{One, Signed, Zero};
use rand::{Rng, RngCore};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::exact::{format_rational, int, rat, to_f64, Rational};
use crate::interval::Interval;
use crate::rational_geometry::RationalBox;

/// `x ↦ ratio·O·x + translation` with `O` orthogonal; all entries rational.
#[derive(Clone, Debug, PartialEq)]
pub struct Similarity {
    pub ratio: Rational,
    pub orthogonal: Vec<Vec<Rational>>,
    pub translation: Vec<Rational>,
}

impl Similarity {
    pub fn new(ratio: Rational, orthogonal: Vec<Vec<Rational>>, translation: Vec<Rational>) -> Result<Self> {
        let k = translation.len();
        if orthogonal.len() != k || orthogonal.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput("orthogonal part must be k×k".into()));
        }
        if !(ratio.is_positive() && ratio < Rational::one()) {
            return Err(Error::InvalidInput(format!("contraction ratio {} not in (0,1)", format_rational(&ratio))));
        }
        for i in 0..k {
            for j in 0..k {
                let dot: Rational = (0..k).map(|l| &orthogonal[l][i] * &orthogonal[l][j]).sum();
                if dot != if i == j { Rational::one() } else { Rational::zero() } {
                    return Err(Error::InvalidInput("linear part is not orthogonal".into()));
                }
            }
        }
        Ok(Similarity { ratio, orthogonal, translation })
    }

    /// `x ↦ ratio·x + translation`.
    pub fn scaling(ratio: Rational, translation: Vec<Rational>) -> Result<Self> {
        let k = translation.len();
        let id = (0..k).map(|i| (0..k).map(|j| if i == j { int(1) } else { int(0) }).collect()).collect();
        Similarity::new(ratio, id, translation)
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        let r = to_f64(&self.ratio);
        (0..self.dim())
            .map(|i| r * (0..self.dim()).map(|j| to_f64(&self.orthogonal[i][j]) * x[j]).sum::<f64>() + to_f64(&self.translation[i]))
            .collect()
    }

    pub fn apply_rational(&self, x: &[Rational]) -> Vec<Rational> {
        (0..self.dim())
            .map(|i| &self.ratio * (0..self.dim()).map(|j| &self.orthogonal[i][j] * &x[j]).sum::<Rational>() + &self.translation[i])
            .collect()
    }

    /// Exact bounding box of the image of a box.
    pub fn image_box(&self, b: &RationalBox) -> RationalBox {
        let k = self.dim();
        let mut lo = vec![None::<Rational>; k];
        let mut hi = vec![None::<Rational>; k];
        for corner in 0..(1usize << k) {
            let x: Vec<Rational> =
                (0..k).map(|i| if corner >> i & 1 == 1 { b.upper()[i].clone() } else { b.lower()[i].clone() }).collect();
            for (i, y) in self.apply_rational(&x).into_iter().enumerate() {
                if lo[i].as_ref().is_none_or(|v| &y < v) {
                    lo[i] = Some(y.clone());
                }
                if hi[i].as_ref().is_none_or(|v| &y > v) {
                    hi[i] = Some(y);
                }
            }
        }
        RationalBox::new(lo.into_iter().map(Option::unwrap).collect(), hi.into_iter().map(Option::unwrap).collect())
            .expect("image box is ordered")
    }

    fn enclosure(&self) -> AffineEnclosure {
        let k = self.dim();
        let r = Interval::from_rational(&self.ratio);
        AffineEnclosure {
            k,
            m: (0..k * k).map(|idx| r * Interval::from_rational(&self.orthogonal[idx / k][idx % k])).collect(),
            t: self.translation.iter().map(Interval::from_rational).collect(),
        }
    }
}

/// Interval enclosure of an affine map `x ↦ M·x + t`, row-major.
#[derive(Clone, Debug)]
pub(crate) struct AffineEnclosure {
    k: usize,
    m: Vec<Interval>,
    t: Vec<Interval>,
}

impl AffineEnclosure {
    fn identity(k: usize) -> Self {
        AffineEnclosure {
            k,
            m: (0..k * k).map(|i| Interval::point(if i / k == i % k { 1.0 } else { 0.0 })).collect(),
            t: vec![Interval::ZERO; k],
        }
    }

    /// `self ∘ other`.
    fn compose(&self, other: &AffineEnclosure) -> AffineEnclosure {
        let k = self.k;
        let mut m = vec![Interval::ZERO; k * k];
        let mut t = self.t.clone();
        for i in 0..k {
            for j in 0..k {
                let a = self.m[i * k + j];
                if a == Interval::ZERO {
                    continue;
                }
                for l in 0..k {
                    let b = other.m[j * k + l];
                    if b != Interval::ZERO {
                        m[i * k + l] = m[i * k + l] + a * b;
                    }
                }
                t[i] = t[i] + a * other.t[j];
            }
        }
        AffineEnclosure { k, m, t }
    }

    /// Axis-aligned enclosure of the image of the box `center ± half`.
    fn image(&self, center: &[f64], half: &[f64]) -> Vec<Interval> {
        let k = self.k;
        (0..k)
            .map(|i| {
                let mut c = self.t[i];
                let mut h = 0.0f64;
                for j in 0..k {
                    let a = self.m[i * k + j];
                    c = c + a * center[j];
                    h = (h + (a.mag() * half[j]).next_up()).next_up();
                }
                Interval::new((c.lo - h).next_down(), (c.hi + h).next_up())
            })
            .collect()
    }

    fn apply_mid(&self, x: &[f64]) -> Vec<f64> {
        let k = self.k;
        (0..k).map(|i| self.t[i].mid() + (0..k).map(|j| self.m[i * k + j].mid() * x[j]).sum::<f64>()).collect()
    }
}

/// Certified bracket `lower <= μ(S) <= upper`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MassInterval {
    pub lower: f64,
    pub upper: f64,
}

impl MassInterval {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Recursion depth: fixed, or chosen per query so cylinders shrink below `scale/divisor`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Depth {
    Fixed(usize),
    Auto { divisor: f64, max: usize },
}

impl Default for Depth {
    fn default() -> Self {
        Depth::Auto { divisor: 32.0, max: 24 }
    }
}

/// A measure that can answer certified region queries and draw support points.
pub trait MeasureHandle {
    fn ambient_dim(&self) -> usize;
    fn measure(&self, region: &dyn Region, depth: Depth) -> Result<MassInterval>;
    /// A point of the support together with its cylinder word.
    fn sample_support(&self, rng: &mut dyn RngCore) -> (Vec<u8>, Vec<f64>);
    fn point_of_word(&self, word: &[u8]) -> Vec<f64>;
    fn rho0(&self) -> f64;
    /// Common contraction ratio, when all maps share one.
    fn common_ratio(&self) -> Option<f64>;
    /// Closed-form Ahlfors exponent when known.
    fn delta_exact(&self) -> Option<f64>;
}

/// Limit measure of an IFS of similarities with rational probability weights.
#[derive(Clone, Debug)]
pub struct SelfSimilarMeasure {
    maps: Vec<Similarity>,
    weights: Vec<Rational>,
    open_set: RationalBox,
    rho0: f64,
    enclosures: Vec<AffineEnclosure>,
    weight_iv: Vec<Interval>,
    hull_center: Vec<f64>,
    hull_half: Vec<f64>,
    anchor: Vec<f64>,
}

impl SelfSimilarMeasure {
    /// Checks the weights, the ratios and the open set condition on the declared box.
    pub fn new(maps: Vec<Similarity>, weights: Vec<Rational>, open_set: RationalBox, rho0: Option<f64>) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidInput("an IFS needs at least two maps".into()));
        }
        if maps.len() > 255 {
            return Err(Error::InvalidInput("at most 255 maps".into()));
        }
        if weights.len() != maps.len() {
            return Err(Error::InvalidInput("one weight per map".into()));
        }
        let k = open_set.dim();
        for m in &maps {
            check_dim(k, m.dim())?;
        }
        if weights.iter().any(|w| !w.is_positive()) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        if weights.iter().sum::<Rational>() != Rational::one() {
            return Err(Error::InvalidInput("weights must sum to 1 exactly".into()));
        }
        check_open_set(&maps, &open_set)?;
        let enclosures: Vec<AffineEnclosure> = maps.iter().map(Similarity::enclosure).collect();
        let weight_iv = weights.iter().map(Interval::from_rational).collect();
        let (hull_center, hull_half) = attractor_hull(&enclosures, &open_set);
        let diam = (hull_half.iter().map(|h| (2.0 * h).powi(2)).sum::<f64>()).sqrt();
        let anchor = fixed_point(&maps[0]);
        let rho0 = rho0.unwrap_or(diam);
        if !(rho0 > 0.0) {
            return Err(Error::InvalidInput("rho0 must be positive".into()));
        }
        Ok(SelfSimilarMeasure { maps, weights, open_set, rho0, enclosures, weight_iv, hull_center, hull_half, anchor })
    }

    /// Equal weights `1/m`.
    pub fn uniform(maps: Vec<Similarity>, open_set: RationalBox) -> Result<Self> {
        let m = maps.len() as i64;
        SelfSimilarMeasure::new(maps, vec![rat(1, m); m as usize], open_set, None)
    }

    /// Middle-thirds Cantor measure on `[0, 1]`.
    pub fn middle_thirds() -> Self {
        let maps = vec![
            Similarity::scaling(rat(1, 3), vec![int(0)]).unwrap(),
            Similarity::scaling(rat(1, 3), vec![rat(2, 3)]).unwrap(),
        ];
        SelfSimilarMeasure::uniform(maps, unit_box(1)).unwrap()
    }

    /// Middle-thirds Cantor measure on `[0, 1]` with weights `(p, 1 − p)`.
    pub fn weighted_cantor(p: Rational) -> Result<Self> {
        let maps = vec![
            Similarity::scaling(rat(1, 3), vec![int(0)])?,
            Similarity::scaling(rat(1, 3), vec![rat(2, 3)])?,
        ];
        let q = int(1) - &p;
        SelfSimilarMeasure::new(maps, vec![p, q], unit_box(1), None)
    }

    /// Cantor measure on `[−3/5, 3/5]` from `u ↦ u/3 ± 2/5`.
    pub fn centered_cantor() -> Self {
        let maps = vec![
            Similarity::scaling(rat(1, 3), vec![rat(-2, 5)]).unwrap(),
            Similarity::scaling(rat(1, 3), vec![rat(2, 5)]).unwrap(),
        ];
        let open = RationalBox::new(vec![rat(-3, 5)], vec![rat(3, 5)]).unwrap();
        SelfSimilarMeasure::uniform(maps, open).unwrap()
    }

    /// Four corners of the unit square at ratio `1/4`.
    pub fn four_corner() -> Self {
        let t = [(0, 0), (3, 0), (0, 3), (3, 3)];
        let maps = t.iter().map(|&(a, b)| Similarity::scaling(rat(1, 4), vec![rat(a, 4), rat(b, 4)]).unwrap()).collect();
        SelfSimilarMeasure::uniform(maps, unit_box(2)).unwrap()
    }

    /// Lebesgue measure on `[0, 1]²` as four half-size squares.
    pub fn square_tiling() -> Self {
        let t = [(0, 0), (1, 0), (0, 1), (1, 1)];
        let maps = t.iter().map(|&(a, b)| Similarity::scaling(rat(1, 2), vec![rat(a, 2), rat(b, 2)]).unwrap()).collect();
        SelfSimilarMeasure::uniform(maps, unit_box(2)).unwrap()
    }

    /// Product of two middle-thirds measures on `[0, 1]²`.
    pub fn cantor_square() -> Self {
        let t = [(0, 0), (2, 0), (0, 2), (2, 2)];
        let maps = t.iter().map(|&(a, b)| Similarity::scaling(rat(1, 3), vec![rat(a, 3), rat(b, 3)]).unwrap()).collect();
        SelfSimilarMeasure::uniform(maps, unit_box(2)).unwrap()
    }

    pub fn maps(&self) -> &[Similarity] {
        &self.maps
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn open_set(&self) -> &RationalBox {
        &self.open_set
    }

    pub fn dim(&self) -> usize {
        self.open_set.dim()
    }

    pub fn with_rho0(mut self, rho0: f64) -> Self {
        self.rho0 = rho0;
        self
    }

    /// Axis-aligned box containing the attractor.
    pub fn attractor_box(&self) -> Vec<Interval> {
        self.hull_center
            .iter()
            .zip(&self.hull_half)
            .map(|(c, h)| Interval::new((c - h).next_down(), (c + h).next_up()))
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        self.hull_half.iter().map(|h| (2.0 * h).powi(2)).sum::<f64>().sqrt()
    }

    fn max_ratio(&self) -> f64 {
        self.maps.iter().map(|m| to_f64(&m.ratio)).fold(0.0, f64::max)
    }

    /// Product of the weights along the word.
    pub fn cylinder_measure(&self, word: &[usize]) -> Result<Rational> {
        let mut p = Rational::one();
        for &i in word {
            let w = self.weights.get(i).ok_or_else(|| Error::InvalidInput(format!("map index {i} out of range")))?;
            p *= w;
        }
        Ok(p)
    }

    /// Enclosure of the cylinder box of a word.
    pub fn cylinder_box(&self, word: &[usize]) -> Result<Vec<Interval>> {
        let mut e = AffineEnclosure::identity(self.dim());
        for &i in word {
            let m = self.enclosures.get(i).ok_or_else(|| Error::InvalidInput(format!("map index {i} out of range")))?;
            e = e.compose(m);
        }
        Ok(e.image(&self.hull_center, &self.hull_half))
    }

    /// Similarity dimension `s` with `Σ r_i^s = 1`.
    pub fn similarity_dimension(&self) -> f64 {
        let rs: Vec<f64> = self.maps.iter().map(|m| to_f64(&m.ratio)).collect();
        let (mut lo, mut hi) = (0.0f64, 64.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if rs.iter().map(|r| r.powf(mid)).sum::<f64>() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn depth_for(&self, depth: Depth, scale: f64) -> usize {
        match depth {
            Depth::Fixed(n) => n,
            Depth::Auto { divisor, max } => {
                let target = scale / divisor;
                let diam = self.diameter();
                if !(target.is_finite()) {
                    return 0;
                }
                let r = self.max_ratio();
                let mut n = 0;
                let mut d = diam;
                while d >= target && n < max {
                    d *= r;
                    n += 1;
                }
                n
            }
        }
    }

    /// Cylinder recursion: inside cylinders count toward both bounds, unresolved ones at the
    /// depth limit toward the upper bound only.
    pub fn measure_of_set(&self, region: &dyn Region, depth: Depth) -> Result<MassInterval> {
        self.measure_scaled(region, depth, 1.0)
    }

    pub(crate) fn measure_scaled(&self, region: &dyn Region, depth: Depth, lipschitz: f64) -> Result<MassInterval> {
        let max_depth = self.depth_for(depth, region.scale() / lipschitz.max(1.0));
        let mut lower = Interval::ZERO;
        let mut upper = Interval::ZERO;
        let mut stack = vec![(AffineEnclosure::identity(self.dim()), Interval::point(1.0), 0usize)];
        while let Some((e, mass, n)) = stack.pop() {
            let bx = e.image(&self.hull_center, &self.hull_half);
            match region.classify(&bx) {
                Containment::Inside => {
                    lower = lower + Interval::point(mass.lo);
                    upper = upper + Interval::point(mass.hi);
                }
                Containment::Outside => {}
                Containment::Unknown if n >= max_depth => upper = upper + Interval::point(mass.hi),
                Containment::Unknown => {
                    for (m, w) in self.enclosures.iter().zip(&self.weight_iv) {
                        stack.push((e.compose(m), mass * *w, n + 1));
                    }
                }
            }
        }
        Ok(MassInterval { lower: lower.lo.max(0.0), upper: upper.hi.min(1.0) })
    }

    fn random_word(&self, rng: &mut dyn RngCore) -> Vec<u8> {
        // length with r_max^len below 1e-16 relative to the diameter
        let len = ((1e-16f64).ln() / self.max_ratio().ln()).ceil() as usize + 1;
        let cum: Vec<f64> = self
            .weights
            .iter()
            .scan(0.0, |s, w| {
                *s += to_f64(w);
                Some(*s)
            })
            .collect();
        (0..len)
            .map(|_| {
                let u: f64 = rng.gen();
                cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1) as u8
            })
            .collect()
    }
}

impl MeasureHandle for SelfSimilarMeasure {
    fn ambient_dim(&self) -> usize {
        self.dim()
    }

    fn measure(&self, region: &dyn Region, depth: Depth) -> Result<MassInterval> {
        check_dim(self.dim(), region.dim())?;
        self.measure_of_set(region, depth)
    }

    fn sample_support(&self, rng: &mut dyn RngCore) -> (Vec<u8>, Vec<f64>) {
        let w = self.random_word(rng);
        let x = self.point_of_word(&w);
        (w, x)
    }

    fn point_of_word(&self, word: &[u8]) -> Vec<f64> {
        let mut x = self.anchor.clone();
        for &i in word.iter().rev() {
            x = self.enclosures[i as usize].apply_mid(&x);
        }
        x
    }

    fn rho0(&self) -> f64 {
        self.rho0
    }

    fn common_ratio(&self) -> Option<f64> {
        let r = &self.maps[0].ratio;
        self.maps.iter().all(|m| &m.ratio == r).then(|| to_f64(r))
    }

    fn delta_exact(&self) -> Option<f64> {
        let r = &self.maps[0].ratio;
        let w = &self.weights[0];
        let equal = self.maps.iter().all(|m| &m.ratio == r) && self.weights.iter().all(|v| v == w);
        equal.then(|| (self.maps.len() as f64).ln() / (1.0 / to_f64(r)).ln())
    }
}

fn unit_box(k: usize) -> RationalBox {
    RationalBox::new(vec![int(0); k], vec![int(1); k]).unwrap()
}

/// Images of the declared box stay inside it and have pairwise disjoint interiors.
fn check_open_set(maps: &[Similarity], open: &RationalBox) -> Result<()> {
    let images: Vec<RationalBox> = maps.iter().map(|m| m.image_box(open)).collect();
    for (i, im) in images.iter().enumerate() {
        let inside = (0..open.dim()).all(|d| open.lower()[d] <= im.lower()[d] && im.upper()[d] <= open.upper()[d]);
        if !inside {
            return Err(Error::InvalidInput(format!("map {i} does not send the open set into itself")));
        }
    }
    for i in 0..images.len() {
        for j in i + 1..images.len() {
            let (a, b) = (&images[i], &images[j]);
            let separated =
                (0..open.dim()).any(|d| a.upper()[d] <= b.lower()[d] || b.upper()[d] <= a.lower()[d]);
            if !separated {
                return Err(Error::InvalidInput(format!("images of maps {i} and {j} overlap")));
            }
        }
    }
    Ok(())
}

/// Shrinks the declared box under the Hutchinson operator until it stabilizes.
fn attractor_hull(enc: &[AffineEnclosure], open: &RationalBox) -> (Vec<f64>, Vec<f64>) {
    let k = open.dim();
    let mut lo: Vec<f64> = open.lower().iter().map(|v| Interval::from_rational(v).lo).collect();
    let mut hi: Vec<f64> = open.upper().iter().map(|v| Interval::from_rational(v).hi).collect();
    for _ in 0..200 {
        let center: Vec<f64> = (0..k).map(|i| 0.5 * (lo[i] + hi[i])).collect();
        let half: Vec<f64> = (0..k).map(|i| (0.5 * (hi[i] - lo[i])).next_up()).collect();
        let mut nlo = vec![f64::INFINITY; k];
        let mut nhi = vec![f64::NEG_INFINITY; k];
        for e in enc {
            for (i, iv) in e.image(&center, &half).iter().enumerate() {
                nlo[i] = nlo[i].min(iv.lo);
                nhi[i] = nhi[i].max(iv.hi);
            }
        }
        let mut changed = false;
        for i in 0..k {
            let (l, h) = (nlo[i].max(lo[i]), nhi[i].min(hi[i]));
            if l > lo[i] + 1e-15 || h < hi[i] - 1e-15 {
                changed = true;
            }
            lo[i] = l;
            hi[i] = h;
        }
        if !changed {
            break;
        }
    }
    let center: Vec<f64> = (0..k).map(|i| 0.5 * (lo[i] + hi[i])).collect();
    let half: Vec<f64> = (0..k).map(|i| (0.5 * (hi[i] - lo[i])).next_up().max(center[i].abs() * 4.0 * f64::EPSILON)).collect();
    (center, half)
}

/// Fixed point of a similarity, by iteration.
fn fixed_point(m: &Similarity) -> Vec<f64> {
    let mut x = vec![0.0; m.dim()];
    for _ in 0..400 {
        x = m.apply_f64(&x);
    }
    x
}
