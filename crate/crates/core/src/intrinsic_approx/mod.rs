//! Best intrinsic approximations, Dirichlet constants and empirical exponents.

mod liouville;

pub use liouville::{liouville_point, verify_witness_chain, LiouvilleOptions, LiouvillePoint};

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::exact::{f64_upper, int, ln_bigint, ln_rational, rational_from_f64, ser_display, Rational};
use crate::interval::Interval;
use crate::rational_geometry::{
    enumerate_points, Backend, EnumerationOptions, QuadraticHypersurface, RationalBox, RationalPoint,
};
use crate::stats::line_fit;

/// Default tolerance on `|P(x)|` for a floating target to count as a point of the quadric.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct ApproximationRecord {
    pub target: Vec<f64>,
    pub approximant: RationalPoint,
    #[serde(serialize_with = "ser_display")]
    pub q: BigInt,
    /// Upper bound on `‖x − p/q‖∞`; zero only for an exact hit.
    pub error: f64,
    /// `ln ‖x − p/q‖∞`, finite even where `error` underflows; `-inf` for an exact hit.
    #[serde(skip)]
    pub ln_error: f64,
    pub exact_hit: bool,
}

impl ApproximationRecord {
    pub fn ln_q(&self) -> f64 {
        ln_bigint(&self.q).unwrap_or(0.0)
    }

    /// `q·error`, from the upper bound.
    pub fn product(&self) -> f64 {
        self.q.to_f64().unwrap_or(f64::INFINITY) * self.error
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaEstimate {
    pub target: Vec<f64>,
    pub records: Vec<ApproximationRecord>,
    /// Regression slope of `ln(1/error)` on `ln q` over the tail records.
    pub omega_hat: f64,
    /// Largest `ln(1/error)/ln q` over the same tail.
    pub omega_tail_max: f64,
    pub c_threshold: Option<f64>,
    #[serde(serialize_with = "ser_display")]
    pub q_max: BigInt,
    /// The target is itself rational; `omega_hat` is `+inf` by convention.
    pub infinite: bool,
}

impl OmegaEstimate {
    /// Membership in `W_c` as judged by `omega_hat > c`.
    pub fn exceeds(&self, c: f64) -> bool {
        self.infinite || self.omega_hat > c
    }
}

/// Rational points of a quadric with their coordinate enclosures, enumerated once and reused for many targets.
#[derive(Clone, Debug)]
pub struct ApproximantSet {
    q_max: u64,
    points: Vec<RationalPoint>,
    enclosures: Vec<Vec<Interval>>,
}

impl ApproximantSet {
    /// All points with `q <= q_max` in the region (the quadric's own bounding box when `None`).
    pub fn enumerate(z: &QuadraticHypersurface, q_max: u64, region: Option<RationalBox>) -> Result<Self> {
        let mut opts = EnumerationOptions::new(q_max, Backend::BruteForce);
        opts.region = region;
        let points = enumerate_points(z, &opts)?;
        Ok(Self::from_points(points, q_max))
    }

    /// Points must be sorted by denominator.
    pub fn from_points(points: Vec<RationalPoint>, q_max: u64) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].denominator() <= w[1].denominator()));
        let enclosures = points.iter().map(RationalPoint::enclosure).collect();
        ApproximantSet { q_max, points, enclosures }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn q_max(&self) -> u64 {
        self.q_max
    }

    pub fn points(&self) -> &[RationalPoint] {
        &self.points
    }
}

/// Rejects targets whose `|P(x)|` certainly exceeds `tolerance`.
pub fn check_target(z: &QuadraticHypersurface, x: &[f64], tolerance: f64) -> Result<()> {
    check_dim(z.dim(), x.len())?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("target has a non-finite coordinate".into()));
    }
    let (near, mag) = z.near_zero_f64(x, tolerance);
    if near {
        Ok(())
    } else {
        Err(Error::TargetOffSurface { residual: mag })
    }
}

fn exact_error(x: &[Rational], p: &RationalPoint) -> Rational {
    x.iter()
        .zip(p.coords())
        .map(|(a, b)| (a - b).abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

fn enclosure_error(x: &[f64], enc: &[Interval]) -> Interval {
    enc.iter()
        .zip(x)
        .map(|(e, &v)| (Interval::point(v) - *e).abs())
        .fold(Interval::ZERO, |m, e| Interval::new(m.lo.max(e.lo), m.hi.max(e.hi)))
}

fn is_exact_hit(x: &[f64], p: &RationalPoint) -> bool {
    p.to_f64() == x
}

/// Successive minima of `‖x − p/q‖∞` over the set: each record strictly beats every smaller denominator.
///
/// The sequence stops at an exact hit, whose error is reported as zero.
pub fn best_approximations_in(
    set: &ApproximantSet,
    z: &QuadraticHypersurface,
    x: &[f64],
    tolerance: f64,
) -> Result<Vec<ApproximationRecord>> {
    check_target(z, x, tolerance)?;
    if set.is_empty() {
        return Err(Error::EmptyEnumeration { q_max: set.q_max });
    }
    let xr: Vec<Rational> = x.iter().map(|&v| rational_from_f64(v).expect("finite")).collect();
    let mut records: Vec<ApproximationRecord> = Vec::new();
    // best (enclosure, index) so far
    let mut best: Option<(Interval, usize)> = None;
    let mut i = 0;
    while i < set.points.len() {
        let q = set.points[i].denominator();
        let mut j = i;
        // best candidate of this denominator
        let mut group: Option<(Interval, usize)> = None;
        while j < set.points.len() && set.points[j].denominator() == q {
            if is_exact_hit(x, &set.points[j]) {
                group = Some((Interval::ZERO, j));
                break;
            }
            let e = enclosure_error(x, &set.enclosures[j]);
            group = match group {
                Some(g) if compare(&xr, set, g, (e, j)) != Ordering::Greater => Some(g),
                _ => Some((e, j)),
            };
            j += 1;
        }
        let (ge, gi) = group.expect("nonempty group");
        let improves = match best {
            None => true,
            Some(b) => compare(&xr, set, (ge, gi), b) == Ordering::Less,
        };
        if improves {
            let p = &set.points[gi];
            let hit = ge == Interval::ZERO && is_exact_hit(x, p);
            let (error, ln_error) = if hit {
                (0.0, f64::NEG_INFINITY)
            } else {
                let exact = exact_error(&xr, p);
                (f64_upper(&exact).min(ge.hi), ln_rational(&exact).unwrap_or(f64::NEG_INFINITY))
            };
            records.push(ApproximationRecord {
                target: x.to_vec(),
                approximant: p.clone(),
                q: p.denominator().clone(),
                error,
                ln_error,
                exact_hit: hit,
            });
            best = Some((ge, gi));
            if hit {
                break;
            }
        }
        while j < set.points.len() && set.points[j].denominator() == q {
            j += 1;
        }
        i = j;
    }
    Ok(records)
}

/// Orders two candidates by error, exactly when their enclosures overlap.
fn compare(xr: &[Rational], set: &ApproximantSet, a: (Interval, usize), b: (Interval, usize)) -> Ordering {
    if a.0 == Interval::ZERO && b.0 == Interval::ZERO {
        return Ordering::Equal;
    }
    if a.0.hi < b.0.lo {
        return Ordering::Less;
    }
    if a.0.lo > b.0.hi {
        return Ordering::Greater;
    }
    let ea = if a.0 == Interval::ZERO { Rational::zero() } else { exact_error(xr, &set.points[a.1]) };
    let eb = if b.0 == Interval::ZERO { Rational::zero() } else { exact_error(xr, &set.points[b.1]) };
    ea.cmp(&eb)
}

/// Default search region: the bounding box of a definite quadric, else the unit cube around the target.
fn default_region(z: &QuadraticHypersurface, x: &[f64]) -> Result<Option<RationalBox>> {
    if z.bounding_box().is_some() {
        return Ok(None);
    }
    let center: Vec<Rational> = x
        .iter()
        .map(|&v| Rational::new(BigInt::from((v * 64.0).round() as i64), BigInt::from(64)))
        .collect();
    Ok(Some(RationalBox::cube(&center, &(int(1) + Rational::new(1.into(), 64.into())))?))
}

/// Successive minima over all points with `q <= q_max`.
///
/// For an indefinite quadric the search is confined to the unit cube around `x`, so leading records
/// with error above 1 may be missing.
pub fn best_approximations(z: &QuadraticHypersurface, x: &[f64], q_max: u64) -> Result<Vec<ApproximationRecord>> {
    if q_max == 0 {
        return Err(Error::InvalidInput("Q_max must be positive".into()));
    }
    check_target(z, x, DEFAULT_TOLERANCE)?;
    let set = ApproximantSet::enumerate(z, q_max, default_region(z, x)?)?;
    best_approximations_in(&set, z, x, DEFAULT_TOLERANCE)
}

/// `max q·error` over the records.
pub fn dirichlet_constant(records: &[ApproximationRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::TooFewRecords { needed: 1, found: 0 });
    }
    Ok(records.iter().map(ApproximationRecord::product).fold(0.0, f64::max))
}

/// `(q, min_{q' <= q} q'·error)` after each record; non-increasing by construction.
pub fn running_min_products(records: &[ApproximationRecord]) -> Vec<(BigInt, f64)> {
    let mut m = f64::INFINITY;
    records
        .iter()
        .map(|r| {
            m = m.min(r.product());
            (r.q.clone(), m)
        })
        .collect()
}

/// `min q·error` over records with `q <= q_cap`; `None` when no record qualifies.
pub fn min_product_up_to(records: &[ApproximationRecord], q_cap: u64) -> Option<f64> {
    let cap = BigInt::from(q_cap);
    records.iter().filter(|r| r.q <= cap).map(ApproximationRecord::product).reduce(f64::min)
}

/// Exponent fit from a record list. Records with `q = 1` and exact hits are excluded;
/// the last `tail` remaining records enter the regression.
pub fn fit_omega(
    target: &[f64],
    records: Vec<ApproximationRecord>,
    tail: usize,
    c_threshold: Option<f64>,
    q_max: BigInt,
) -> Result<OmegaEstimate> {
    let infinite = records.iter().any(|r| r.exact_hit);
    let usable: Vec<&ApproximationRecord> =
        records.iter().filter(|r| !r.exact_hit && r.q > BigInt::from(1) && r.ln_error.is_finite()).collect();
    if infinite {
        return Ok(OmegaEstimate {
            target: target.to_vec(),
            records,
            omega_hat: f64::INFINITY,
            omega_tail_max: f64::INFINITY,
            c_threshold,
            q_max,
            infinite: true,
        });
    }
    if usable.len() < 3 {
        return Err(Error::TooFewRecords { needed: 3, found: usable.len() });
    }
    let r = tail.max(3).min(usable.len());
    let window = &usable[usable.len() - r..];
    let xs: Vec<f64> = window.iter().map(|r| r.ln_q()).collect();
    let ys: Vec<f64> = window.iter().map(|r| -r.ln_error).collect();
    let fit = line_fit(&xs, &ys).ok_or(Error::TooFewRecords { needed: 3, found: window.len() })?;
    let tail_max = xs.iter().zip(&ys).map(|(x, y)| y / x).fold(f64::NEG_INFINITY, f64::max);
    Ok(OmegaEstimate {
        target: target.to_vec(),
        records,
        omega_hat: fit.slope,
        omega_tail_max: tail_max,
        c_threshold,
        q_max,
        infinite: false,
    })
}

pub fn estimate_omega(z: &QuadraticHypersurface, x: &[f64], q_max: u64, tail: usize) -> Result<OmegaEstimate> {
    let records = best_approximations(z, x, q_max)?;
    fit_omega(x, records, tail, None, BigInt::from(q_max))
}

/// Same as [`estimate_omega`] over a pre-enumerated set.
pub fn estimate_omega_in(
    set: &ApproximantSet,
    z: &QuadraticHypersurface,
    x: &[f64],
    tail: usize,
) -> Result<OmegaEstimate> {
    let records = best_approximations_in(set, z, x, DEFAULT_TOLERANCE)?;
    fit_omega(x, records, tail, None, BigInt::from(set.q_max))
}

/// Points `(cos θ, sin θ)` on the unit circle with `θ` drawn uniformly from `(lo, hi)`.
pub fn circle_targets(rng: &mut impl rand::Rng, n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let t: f64 = rng.gen_range(lo..hi);
            vec![t.cos(), t.sin()]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> QuadraticHypersurface {
        QuadraticHypersurface::unit_sphere(2)
    }

    #[test]
    fn rational_target_is_an_exact_hit() {
        let recs = best_approximations(&circle(), &[0.6, 0.8], 10).unwrap();
        let last = recs.last().unwrap();
        assert!(last.exact_hit);
        assert_eq!(last.error, 0.0);
        assert_eq!(last.q, BigInt::from(5));
        assert_eq!(last.approximant, RationalPoint::from_i64(&[3, 4], 5).unwrap());
        let est = estimate_omega(&circle(), &[0.6, 0.8], 10, 5).unwrap();
        assert!(est.infinite && est.exceeds(100.0));
    }

    #[test]
    fn off_surface_target_rejected() {
        assert!(matches!(best_approximations(&circle(), &[1.0 + 1e-6, 0.0], 10), Err(Error::TargetOffSurface { .. })));
        assert!(matches!(best_approximations(&circle(), &[1.0, 0.0, 0.0], 10), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dirichlet_constant_is_max_product() {
        let mk = |q: i64, e: f64| ApproximationRecord {
            target: vec![0.0, 1.0],
            approximant: RationalPoint::from_i64(&[0, q], q).unwrap(),
            q: BigInt::from(q),
            error: e,
            ln_error: e.ln(),
            exact_hit: false,
        };
        assert_eq!(dirichlet_constant(&[mk(1, 0.4), mk(5, 0.05)]).unwrap(), 0.4);
        assert!(dirichlet_constant(&[]).is_err());
    }

    #[test]
    fn records_strictly_improve() {
        let x = [1f64.cos(), 1f64.sin()];
        let recs = best_approximations(&circle(), &x, 100).unwrap();
        assert!(recs.len() >= 3);
        for w in recs.windows(2) {
            assert!(w[0].q < w[1].q);
            assert!(w[0].ln_error > w[1].ln_error);
        }
        let c = dirichlet_constant(&recs).unwrap();
        assert!(c <= 10.0);
        let last = recs.last().unwrap();
        assert!(last.product() <= c);
    }
}
