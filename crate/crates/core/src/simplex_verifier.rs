//! Exact checks that low-height rational points in small balls lie on a hyperplane.

use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::exact::{floor_rational, format_rational, ser_rational, Rational};
use crate::rational_geometry::enumerate::enumerate_points_with_stats;
use crate::rational_geometry::{
    affine_rank, fit_hyperplane, AffineHyperplane, Backend, EnumerationOptions, QuadraticHypersurface, RationalBox,
    RationalPoint,
};

/// Closed Euclidean ball with rational center and radius.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalBall {
    #[serde(serialize_with = "ser_rationals")]
    pub center: Vec<Rational>,
    #[serde(serialize_with = "ser_rational")]
    pub radius: Rational,
}

fn ser_rationals<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(format_rational))
}

impl RationalBall {
    pub fn new(center: Vec<Rational>, radius: Rational) -> Result<Self> {
        if !radius.is_positive() {
            return Err(Error::InvalidInput("ball radius must be positive".into()));
        }
        Ok(RationalBall { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &RationalPoint) -> bool {
        let d2: Rational = self.center.iter().enumerate().map(|(i, c)| (x.coord(i) - c) * (x.coord(i) - c)).sum();
        d2 <= &self.radius * &self.radius
    }

    pub fn bounding_box(&self) -> Result<RationalBox> {
        RationalBox::cube(&self.center, &self.radius)
    }
}

/// Outcome of one ball: either a hyperplane through every point or `d + 1` affinely independent points.
#[derive(Clone, Debug, Serialize)]
pub struct SimplexCertificate {
    pub ball: RationalBall,
    #[serde(serialize_with = "ser_rational")]
    pub kappa: Rational,
    /// `⌊κ/ρ⌋`.
    pub q_max: u64,
    pub points: Vec<RationalPoint>,
    pub affine_rank: usize,
    pub valid: bool,
    pub hyperplane: Option<AffineHyperplane>,
    pub violation: Option<Vec<RationalPoint>>,
    pub candidates: u64,
}

/// Points ordered by denominator, then numerators.
fn height_order(points: &mut [RationalPoint]) {
    points.sort_by(|a, b| a.denominator().cmp(b.denominator()).then_with(|| a.numerators().cmp(b.numerators())));
}

/// First affinely independent `d + 1` points in height order.
fn independent_tuple(points: &[RationalPoint], d: usize) -> Option<Vec<RationalPoint>> {
    let mut chosen: Vec<RationalPoint> = Vec::new();
    for p in points {
        chosen.push(p.clone());
        if affine_rank(&chosen) + 1 < chosen.len() {
            chosen.pop();
        }
        if chosen.len() == d + 1 {
            return Some(chosen);
        }
    }
    None
}

/// Brute-force enumeration of `Z ∩ K ∩ B` with `q <= κ/ρ`, by doubling the height cap.
///
/// A violation found below the cap is already a violation at the cap, so the search stops there.
pub fn verify_simplex(
    z: &QuadraticHypersurface,
    k: &RationalBox,
    ball: &RationalBall,
    kappa: &Rational,
    budget: Option<u64>,
) -> Result<SimplexCertificate> {
    let d = z.dim();
    check_dim(d, ball.dim())?;
    check_dim(d, k.dim())?;
    if !kappa.is_positive() {
        return Err(Error::InvalidInput("kappa must be positive".into()));
    }
    let q_max = floor_rational(&(kappa / &ball.radius))
        .to_u64()
        .ok_or_else(|| Error::BudgetExceeded("height cap kappa/rho does not fit in 64 bits".into()))?;
    let mut cert = SimplexCertificate {
        ball: ball.clone(),
        kappa: kappa.clone(),
        q_max,
        points: Vec::new(),
        affine_rank: 0,
        valid: true,
        hyperplane: None,
        violation: None,
        candidates: 0,
    };
    let region = match ball.bounding_box()?.intersect(k)? {
        Some(r) if q_max > 0 => r,
        _ => return Ok(cert),
    };
    let mut cap = 1u64;
    loop {
        cap = cap.min(q_max);
        let mut opts = EnumerationOptions::new(cap, Backend::BruteForce).with_region(region.clone());
        opts.budget = budget.map(|b| b.saturating_sub(cert.candidates));
        let (found, stats) = enumerate_points_with_stats(z, &opts)?;
        cert.candidates += stats.candidates;
        let mut pts: Vec<RationalPoint> = found.into_iter().filter(|p| ball.contains(p)).collect();
        height_order(&mut pts);
        cert.affine_rank = affine_rank(&pts);
        if cert.affine_rank >= d {
            cert.valid = false;
            cert.violation = independent_tuple(&pts, d);
            cert.points = pts;
            return Ok(cert);
        }
        if cap == q_max {
            cert.hyperplane = fit_hyperplane(&pts);
            cert.points = pts;
            return Ok(cert);
        }
        cap = cap.saturating_mul(2);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ViolationRow {
    #[serde(serialize_with = "ser_rational")]
    pub kappa: Rational,
    pub ball: usize,
    pub affine_rank: usize,
    pub witness: Vec<RationalPoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KappaCalibration {
    /// Largest grid value with no violation, if any.
    #[serde(serialize_with = "ser_opt_rational")]
    pub kappa: Option<Rational>,
    #[serde(serialize_with = "ser_opt_rational")]
    pub smallest_tried: Option<Rational>,
    pub violations: Vec<ViolationRow>,
    pub certificates: Vec<SimplexCertificate>,
}

fn ser_opt_rational<S: serde::Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_some(&format_rational(r)),
        None => s.serialize_none(),
    }
}

impl KappaCalibration {
    /// The calibrated value, or a diagnostic naming the smallest value tried.
    pub fn require(&self) -> Result<Rational> {
        self.kappa.clone().ok_or_else(|| {
            Error::Diagnostic(format!(
                "no kappa in the grid passes; smallest tried {}",
                self.smallest_tried.as_ref().map(format_rational).unwrap_or_default()
            ))
        })
    }
}

/// Scans a decreasing grid and stops at the first `κ` that every ball accepts.
pub fn calibrate_kappa(
    z: &QuadraticHypersurface,
    k: &RationalBox,
    balls: &[RationalBall],
    grid: &[Rational],
    budget: Option<u64>,
) -> Result<KappaCalibration> {
    if balls.is_empty() {
        return Err(Error::InvalidInput("empty family".into()));
    }
    if grid.is_empty() || grid.iter().any(|g| !g.is_positive()) {
        return Err(Error::InvalidInput("kappa grid must be nonempty and positive".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("kappa grid must be strictly decreasing".into()));
    }
    let mut out = KappaCalibration { kappa: None, smallest_tried: None, violations: Vec::new(), certificates: Vec::new() };
    for kappa in grid {
        out.smallest_tried = Some(kappa.clone());
        let certs = balls.iter().map(|b| verify_simplex(z, k, b, kappa, budget)).collect::<Result<Vec<_>>>()?;
        let mut clean = true;
        for (i, c) in certs.iter().enumerate() {
            if !c.valid {
                clean = false;
                out.violations.push(ViolationRow {
                    kappa: kappa.clone(),
                    ball: i,
                    affine_rank: c.affine_rank,
                    witness: c.violation.clone().unwrap_or_default(),
                });
            }
        }
        if clean {
            out.kappa = Some(kappa.clone());
            out.certificates = certs;
            break;
        }
    }
    Ok(out)
}

/// `d + 1` points listed as rationals, for reports.
pub fn format_points(points: &[RationalPoint]) -> Vec<Vec<String>> {
    points.iter().map(|p| p.coords().iter().map(format_rational).collect()).collect()
}

/// Whether the hyperplane contains every point exactly.
pub fn witness_holds(cert: &SimplexCertificate) -> bool {
    match &cert.hyperplane {
        Some(h) => cert.points.iter().all(|p| h.contains(p)),
        None => cert.points.is_empty() || !cert.valid,
    }
}

/// Rational approximation `n/2^bits` of a float, rounded toward zero.
pub fn dyadic(x: f64, bits: u32) -> Rational {
    let scale = 2f64.powi(bits as i32);
    let n = (x * scale).trunc();
    Rational::new(num_bigint::BigInt::from(n as i64), num_bigint::BigInt::one() << bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    fn square(r: i64) -> RationalBox {
        RationalBox::new(vec![int(-r), int(-r)], vec![int(r), int(r)]).unwrap()
    }

    #[test]
    fn single_point_near_one_zero() {
        let z = QuadraticHypersurface::unit_sphere(2);
        let b = RationalBall::new(vec![int(1), int(0)], rat(1, 10)).unwrap();
        let c = verify_simplex(&z, &square(2), &b, &int(1), None).unwrap();
        assert_eq!(c.q_max, 10);
        assert_eq!(c.points, vec![RationalPoint::from_i64(&[1, 0], 1).unwrap()]);
        assert_eq!(c.affine_rank, 0);
        assert!(c.valid && witness_holds(&c));
    }

    #[test]
    fn tiny_budget_is_reported() {
        let z = QuadraticHypersurface::unit_sphere(2);
        let b = RationalBall::new(vec![int(1), int(0)], rat(1, 1000)).unwrap();
        let r = verify_simplex(&z, &square(2), &b, &int(1000), Some(10));
        assert!(matches!(r, Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn dyadic_rounds_toward_zero() {
        assert_eq!(dyadic(0.75, 4), rat(3, 4));
        assert_eq!(dyadic(-0.3, 2), rat(-1, 4));
        assert!(dyadic(0.1, 10).is_positive() && dyadic(0.1, 10) <= rat(1, 10));
    }
}
