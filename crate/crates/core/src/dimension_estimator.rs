//! Two-scale covers of a charted measure and their cost sums.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::exact::{format_rational, to_f64, Rational};
use crate::fractal_measures::region::{HyperplaneSlab, Intersection, Union};
use crate::fractal_measures::{Ball, Depth, IntervalMap, MeasureHandle, Pushforward, Region};
use crate::interval::Interval;
use crate::rational_geometry::{QuadraticHypersurface, RationalBox, RationalPoint};
use crate::simplex_verifier::{dyadic, verify_simplex, RationalBall};
use crate::stats::line_fit;

/// Relative floor below which `f64` support points stop resolving the cover.
const MIN_RESOLUTION: f64 = 1e-13;
const CENTER_BITS: u32 = 48;
const GRID_SHIFTS: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct CoverConfig {
    /// Approximation exponent, `c >= 1`.
    pub c: f64,
    #[serde(serialize_with = "crate::exact::ser_rational")]
    pub kappa: Rational,
    pub levels: Vec<u32>,
    /// Support points are generated at resolution `scale / resolution_factor`.
    pub resolution_factor: f64,
    pub budget: Option<u64>,
}

impl CoverConfig {
    pub fn new(c: f64, kappa: Rational, levels: Vec<u32>) -> Self {
        CoverConfig { c, kappa, levels, resolution_factor: 8.0, budget: None }
    }
}

/// `L_x ∩ Z` as used for the slab around one center.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlabTarget {
    /// Finitely many points of `Z`.
    Points { points: Vec<Vec<f64>> },
    /// The affine span itself; used when it is not a line meeting `Z` in finitely many points.
    Flat { origin: Vec<f64>, basis: Vec<Vec<f64>> },
}

impl SlabTarget {
    pub fn distance(&self, y: &[f64]) -> f64 {
        match self {
            SlabTarget::Points { points } => points.iter().map(|p| dist(p, y)).fold(f64::INFINITY, f64::min),
            SlabTarget::Flat { origin, basis } => {
                let mut v: Vec<f64> = y.iter().zip(origin).map(|(a, b)| a - b).collect();
                for e in basis {
                    let t: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(e).for_each(|(a, b)| *a -= t * b);
                }
                norm(&v)
            }
        }
    }

    /// A certified region containing the closed `w`-neighborhood.
    fn thickening(&self, w: f64) -> Result<Box<dyn Region + Send + Sync>> {
        Ok(match self {
            SlabTarget::Points { points } => {
                let balls = points.iter().map(|p| Ball::new(p.clone(), w).map(|b| Box::new(b) as Box<dyn Region + Send + Sync>));
                Box::new(Union(balls.collect::<Result<Vec<_>>>()?))
            }
            SlabTarget::Flat { origin, basis } => {
                // slab of a hyperplane containing the flat
                let d = origin.len();
                let normal = (0..d)
                    .map(|i| {
                        let mut v = vec![0.0; d];
                        v[i] = 1.0;
                        for e in basis {
                            let t = e[i];
                            v.iter_mut().zip(e).for_each(|(a, b)| *a -= t * b);
                        }
                        v
                    })
                    .max_by(|a, b| norm(a).total_cmp(&norm(b)))
                    .expect("d >= 1");
                let offset = normal.iter().zip(origin).map(|(a, b)| a * b).sum();
                Box::new(HyperplaneSlab::new(normal, offset, w * (1.0 + 1e-9))?)
            }
        })
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `L ∩ Z`, where `L` is the affine span of the points, extended through the center `x ∈ Z`
/// while its dimension is below `d − 1`.
fn slab_target(z: &QuadraticHypersurface, points: &[RationalPoint], rank: usize, x: &[f64]) -> SlabTarget {
    let d = z.dim();
    let mut pts: Vec<Vec<f64>> = points.iter().map(RationalPoint::to_f64).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let origin = pts.first().cloned().unwrap_or_else(|| x.to_vec());
    let residual = |y: &[f64], basis: &[Vec<f64>]| -> Vec<f64> {
        let mut v: Vec<f64> = y.iter().zip(&origin).map(|(a, b)| a - b).collect();
        for e in basis {
            let t: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(e).for_each(|(a, b)| *a -= t * b);
        }
        v
    };
    for p in pts.iter().skip(1) {
        let v = residual(p, &basis);
        let n = norm(&v);
        if n > 1e-12 && basis.len() < rank {
            basis.push(v.iter().map(|c| c / n).collect());
        }
    }
    if pts.is_empty() {
        pts.push(x.to_vec());
    } else if basis.len() + 1 < d {
        let v = residual(x, &basis);
        let n = norm(&v);
        if n > 1e-12 {
            basis.push(v.iter().map(|c| c / n).collect());
            pts.push(x.to_vec());
        }
    }
    match basis.len() {
        0 => SlabTarget::Points { points: vec![origin] },
        1 => {
            // a line meets Z in at most two points unless vᵀAv = 0
            let v = &basis[0];
            let a: f64 = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| z.quadratic()[i][j] as f64 * v[i] * v[j]).sum();
            let mut ends: Vec<Vec<f64>> = Vec::new();
            for p in pts {
                if ends.iter().all(|e| dist(e, &p) > 1e-12) {
                    ends.push(p);
                }
            }
            if a.abs() > 1e-9 && ends.len() <= 2 {
                SlabTarget::Points { points: ends }
            } else {
                SlabTarget::Flat { origin, basis }
            }
        }
        _ => SlabTarget::Flat { origin, basis },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverCenter {
    pub x: Vec<f64>,
    pub word: Vec<u8>,
    /// Rational points of `Z ∩ K ∩ 2B` with `q <= κ/(2ρ)`.
    pub points: Vec<Vec<String>>,
    pub affine_rank: usize,
    pub target: SlabTarget,
    /// Centers of the `ρ^c`-balls.
    pub t: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverLevel {
    pub n: u32,
    pub rho: f64,
    pub c: f64,
    /// `ρ^c`.
    pub slab_radius: f64,
    pub centers: Vec<CoverCenter>,
    /// Support points the centers were chosen from.
    #[serde(skip)]
    pub support: Vec<Vec<f64>>,
    pub support_resolution: f64,
    pub slab_resolution: f64,
}

impl CoverLevel {
    pub fn ball_count(&self) -> usize {
        self.centers.iter().map(|c| c.t.len()).sum()
    }

    pub fn live_centers(&self) -> usize {
        self.centers.iter().filter(|c| !c.t.is_empty()).count()
    }

    /// Pairwise distances exceed `ρ` in `S_n` and `ρ^c` within each `T_x`.
    pub fn separated(&self) -> bool {
        let sep = |pts: &[&[f64]], r: f64| pts.iter().enumerate().all(|(i, a)| pts[..i].iter().all(|b| dist(a, b) > r));
        let s: Vec<&[f64]> = self.centers.iter().map(|c| c.x.as_slice()).collect();
        sep(&s, self.rho)
            && self.centers.iter().all(|c| {
                let t: Vec<&[f64]> = c.t.iter().map(Vec::as_slice).collect();
                sep(&t, self.slab_radius)
            })
    }

    /// Every generated support point lies within `ρ` of a center.
    pub fn maximal(&self) -> bool {
        self.support.iter().all(|y| self.centers.iter().any(|c| dist(&c.x, y) <= self.rho))
    }

    /// Largest number of balls `B(x, 2ρ)` containing one support point.
    pub fn multiplicity(&self) -> usize {
        self.support
            .iter()
            .map(|y| self.centers.iter().filter(|c| dist(&c.x, y) <= 2.0 * self.rho).count())
            .max()
            .unwrap_or(0)
    }

    /// `Σ_x |T_x| (2ρ^c)^s`.
    pub fn cost(&self, s: f64) -> f64 {
        self.ball_count() as f64 * (2.0 * self.slab_radius).powf(s)
    }
}

/// Support points at resolution `res`, one per cylinder whose image meets `keep`.
fn support_points<F: IntervalMap>(
    nu: &Pushforward<F>,
    root: &[usize],
    res: f64,
    keep: &dyn Fn(&[f64], f64) -> bool,
) -> Result<Vec<(Vec<u8>, Vec<f64>)>> {
    let mu = nu.source();
    let map = nu.map();
    let m = mu.maps().len();
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![root.to_vec()];
    while let Some(word) = stack.pop() {
        let bx = map.eval_box(&mu.cylinder_box(&word)?);
        let center: Vec<f64> = bx.iter().map(Interval::mid).collect();
        let half = 0.5 * bx.iter().map(|i| (i.hi - i.lo).powi(2)).sum::<f64>().sqrt();
        if !keep(&center, half) {
            continue;
        }
        if 2.0 * half <= res {
            let w: Vec<u8> = word.iter().map(|&i| i as u8).collect();
            let y = map.eval(&mu.point_of_word(&w));
            out.push((w, y));
            continue;
        }
        if word.len() > 200 {
            return Err(Error::BudgetExceeded("cylinder depth above 200 while generating support points".into()));
        }
        // reversed so that the stack yields words in lexicographic order
        for i in (0..m).rev() {
            let mut w = word.clone();
            w.push(i);
            stack.push(w);
        }
    }
    Ok(out)
}

/// Greedy farthest-point insertion: pairwise distances exceed `r` and every point is within `r` of the result.
fn farthest_point_net(points: &[(Vec<u8>, Vec<f64>)], r: f64) -> Vec<usize> {
    let Some(_) = points.first() else { return Vec::new() };
    let mut chosen = vec![0];
    let mut gap: Vec<f64> = points.iter().map(|(_, y)| dist(y, &points[0].1)).collect();
    loop {
        let (i, g) = gap.iter().enumerate().fold((0, f64::NEG_INFINITY), |(bi, bg), (i, &g)| if g > bg { (i, g) } else { (bi, bg) });
        if g <= r {
            return chosen;
        }
        chosen.push(i);
        for (j, (_, y)) in points.iter().enumerate() {
            gap[j] = gap[j].min(dist(y, &points[i].1));
        }
    }
}

/// Axis box around the support of `ν`, widened by `margin`, with rational corners.
pub fn support_box<F: IntervalMap>(nu: &Pushforward<F>, margin: f64) -> Result<RationalBox> {
    let bx = nu.map().eval_box(&nu.source().attractor_box());
    let lo = bx.iter().map(|i| dyadic(i.lo - margin, 16) - Rational::new(1.into(), (1u64 << 16).into())).collect();
    let hi = bx.iter().map(|i| dyadic(i.hi + margin, 16) + Rational::new(1.into(), (1u64 << 16).into())).collect();
    RationalBox::new(lo, hi)
}

/// `S_n`, the hyperplanes `L_x = L_{2B}` and the slab sets `T_x` at level `n`.
pub fn build_cover_level<F: IntervalMap>(
    nu: &Pushforward<F>,
    z: &QuadraticHypersurface,
    k: &RationalBox,
    cfg: &CoverConfig,
    n: u32,
) -> Result<CoverLevel> {
    if !(cfg.c >= 1.0) {
        return Err(Error::InvalidInput(format!("c must be at least 1, got {}", cfg.c)));
    }
    check_dim(z.dim(), nu.ambient_dim())?;
    let rho = 0.5f64.powi(n as i32);
    let r = rho.powf(cfg.c);
    let support_res = rho / cfg.resolution_factor;
    let slab_res = r / cfg.resolution_factor;
    if slab_res < MIN_RESOLUTION {
        return Err(Error::BudgetExceeded(format!("resolution {slab_res:e} below the support-sampling floor {MIN_RESOLUTION:e}")));
    }
    let support = support_points(nu, &[], support_res, &|_, _| true)?;
    let net = farthest_point_net(&support, rho);
    let two_rho = Rational::new(2.into(), num_bigint::BigInt::one() << n);
    let mut centers = Vec::with_capacity(net.len());
    for &i in &net {
        let (word, x) = &support[i];
        let ball = RationalBall::new(x.iter().map(|&v| dyadic(v, CENTER_BITS)).collect(), two_rho.clone())?;
        let cert = verify_simplex(z, k, &ball, &cfg.kappa, cfg.budget)?;
        if !cert.valid {
            return Err(Error::Diagnostic(format!(
                "simplex violation at level {n} near {:?} with kappa = {}",
                x,
                format_rational(&cfg.kappa)
            )));
        }
        let target = slab_target(z, &cert.points, cert.affine_rank, x);
        let keep = |c: &[f64], half: f64| dist(c, x) - half <= rho && target.distance(c) - half <= r;
        let mut t: Vec<Vec<f64>> = Vec::new();
        for (_, y) in support_points(nu, &[], slab_res, &keep)? {
            if dist(&y, x) <= rho && target.distance(&y) <= r && t.iter().all(|u| dist(u, &y) > r) {
                t.push(y);
            }
        }
        centers.push(CoverCenter {
            x: x.clone(),
            word: word.clone(),
            points: cert.points.iter().map(|p| p.coords().iter().map(format_rational).collect()).collect(),
            affine_rank: cert.affine_rank,
            target,
            t,
        });
    }
    Ok(CoverLevel {
        n,
        rho,
        c: cfg.c,
        slab_radius: r,
        centers,
        support: support.into_iter().map(|(_, y)| y).collect(),
        support_resolution: support_res,
        slab_resolution: slab_res,
    })
}

pub fn build_cover<F: IntervalMap>(
    nu: &Pushforward<F>,
    z: &QuadraticHypersurface,
    k: &RationalBox,
    cfg: &CoverConfig,
) -> Result<Vec<CoverLevel>> {
    if cfg.levels.is_empty() {
        return Err(Error::InvalidInput("no levels".into()));
    }
    if cfg.levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("levels must be strictly increasing".into()));
    }
    cfg.levels.iter().map(|&n| build_cover_level(nu, z, k, cfg, n)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CostRow {
    pub s: f64,
    pub per_level: Vec<f64>,
    pub cumulative: f64,
    /// `cost_{n+1} / cost_n`; `0` when both vanish.
    pub ratios: Vec<f64>,
    /// Common ratio of the geometric fit to the last `tail + 1` level costs.
    pub tail_ratio: f64,
    pub summable: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Summability {
    /// Tail ratios must stay below `theta`.
    pub theta: f64,
    /// Number of trailing ratios examined.
    pub tail: usize,
}

impl Default for Summability {
    fn default() -> Self {
        Summability { theta: 0.98, tail: 4 }
    }
}

/// `exp` of the least-squares slope of `ln cost_n` against `n`; `0` once the last cost vanishes.
fn fitted_ratio(costs: &[f64]) -> f64 {
    match costs {
        [] | [_] => f64::NAN,
        _ if *costs.last().expect("nonempty") == 0.0 => 0.0,
        _ if costs.contains(&0.0) => f64::INFINITY,
        _ => {
            let xs: Vec<f64> = (0..costs.len()).map(|i| i as f64).collect();
            let ys: Vec<f64> = costs.iter().map(|c| c.ln()).collect();
            line_fit(&xs, &ys).map_or(f64::NAN, |f| f.slope.exp())
        }
    }
}

/// Per-level and cumulative `cost_s`, with the tail-ratio summability flag.
pub fn cost_sum(levels: &[CoverLevel], s: f64, rule: Summability) -> Result<CostRow> {
    if levels.is_empty() {
        return Err(Error::InvalidInput("no levels".into()));
    }
    let per_level: Vec<f64> = levels.iter().map(|l| l.cost(s)).collect();
    let ratios: Vec<f64> = per_level
        .windows(2)
        .map(|w| match (w[0] == 0.0, w[1] == 0.0) {
            (true, true) => 0.0,
            (true, false) => f64::INFINITY,
            _ => w[1] / w[0],
        })
        .collect();
    let tail_ratio = fitted_ratio(&per_level[per_level.len().saturating_sub(rule.tail + 1)..]);
    let summable = ratios.len() >= rule.tail && tail_ratio < rule.theta;
    Ok(CostRow { s, cumulative: per_level.iter().sum(), per_level, ratios, tail_ratio, summable })
}

/// Exponents of the source profile.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Exponents {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSummary {
    pub n: u32,
    pub centers: usize,
    pub live_centers: usize,
    pub balls: usize,
    pub multiplicity: usize,
    pub separated: bool,
    pub maximal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CostReport {
    pub c: f64,
    pub exponents: Exponents,
    /// `δ − α(1 − 1/c)`.
    pub bound_alpha: f64,
    /// `δ − β(1 − 1/c)`.
    pub bound_beta: f64,
    pub rows: Vec<CostRow>,
    /// Least grid value from which every larger grid value is summable.
    pub s_star: Option<f64>,
    /// Cost row at `s = δ`.
    pub at_delta: CostRow,
    /// `2^{−β(c−1)}`.
    pub predicted_ratio: f64,
    pub rule: Summability,
    pub levels: Vec<LevelSummary>,
}

impl CostReport {
    pub fn require(&self) -> Result<f64> {
        self.s_star.ok_or_else(|| {
            Error::Diagnostic(format!(
                "no grid value is summable; tail ratios at the largest s: {:?}",
                self.rows.last().map(|r| r.ratios.clone()).unwrap_or_default()
            ))
        })
    }

    /// Relative gap between the measured tail ratio at `s = δ` and `2^{−β(c−1)}`.
    pub fn ratio_mismatch(&self) -> f64 {
        (self.at_delta.tail_ratio - self.predicted_ratio).abs() / self.predicted_ratio
    }
}

pub fn summarize(levels: &[CoverLevel]) -> Vec<LevelSummary> {
    levels
        .iter()
        .map(|l| LevelSummary {
            n: l.n,
            centers: l.centers.len(),
            live_centers: l.live_centers(),
            balls: l.ball_count(),
            multiplicity: l.multiplicity(),
            separated: l.separated(),
            maximal: l.maximal(),
        })
        .collect()
}

/// Cost rows over an increasing `s` grid and the least empirically summable exponent.
pub fn transition_exponent(
    levels: &[CoverLevel],
    exponents: Exponents,
    s_grid: &[f64],
    rule: Summability,
) -> Result<CostReport> {
    if s_grid.is_empty() || s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("s grid must be nonempty and increasing".into()));
    }
    if levels.len() < 6 {
        return Err(Error::InvalidInput(format!("need at least 6 levels, got {}", levels.len())));
    }
    let c = levels[0].c;
    let rows = s_grid.iter().map(|&s| cost_sum(levels, s, rule)).collect::<Result<Vec<_>>>()?;
    let s_star = (0..rows.len()).find(|&i| rows[i..].iter().all(|r| r.summable)).map(|i| rows[i].s);
    let shrink = 1.0 - 1.0 / c;
    Ok(CostReport {
        c,
        exponents,
        bound_alpha: exponents.delta - exponents.alpha * shrink,
        bound_beta: exponents.delta - exponents.beta * shrink,
        rows,
        s_star,
        at_delta: cost_sum(levels, exponents.delta, rule)?,
        predicted_ratio: 2f64.powf(-exponents.beta * (c - 1.0)),
        rule,
        levels: summarize(levels),
    })
}

/// The four forms of the cost estimate at one level, each bounding the previous up to a constant.
#[derive(Clone, Debug, Serialize)]
pub struct ChainLinks {
    pub n: u32,
    /// `Σ_x Σ_y (2ρ^c)^s`.
    pub counted: f64,
    /// `Σ_x Σ_y ν(B(y, ρ^c)) (ρ^c)^{s−δ}`.
    pub ahlfors: f64,
    /// `ρ^{c(s−δ)} Σ_x ν(B(x, 2ρ) ∩ (L_x ∩ Z)^(2ρ^c))`.
    pub slab: f64,
    /// `ρ^{c(s−δ)} Σ_x (ρ^{c−1})^β ν(B(x, 2ρ))`, over live centers.
    pub decay: f64,
}

/// Constants carried from the measure fits.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChainConstants {
    /// `ν(B(y, r)) >= lower · r^δ` on the support.
    pub ahlfors_lower: f64,
    /// Overlap bound for the `ρ^c`-balls inside one slab.
    pub multiplicity: f64,
    /// `R(ε) <= decay · ε^β`.
    pub decay: f64,
}

impl ChainLinks {
    /// Each form is bounded by the next times its constant.
    pub fn holds(&self, s: f64, k: &ChainConstants) -> [bool; 3] {
        [
            self.counted <= 2f64.powf(s) / k.ahlfors_lower * self.ahlfors * (1.0 + 1e-9),
            self.ahlfors <= k.multiplicity * self.slab * (1.0 + 1e-9),
            self.slab <= k.decay * self.decay * (1.0 + 1e-9),
        ]
    }
}

/// Measures every form of the cost chain at `s`, using upper brackets on the larger side.
pub fn chain_links<F: IntervalMap + Sync>(nu: &Pushforward<F>, level: &CoverLevel, s: f64, exponents: Exponents, depth: Depth) -> Result<ChainLinks> {
    let r = level.slab_radius;
    let scale = r.powf(s - exponents.delta);
    let outer = level.rho.powf(level.c * (s - exponents.delta));
    let eps_beta = level.rho.powf((level.c - 1.0) * exponents.beta);
    let mut links = ChainLinks { n: level.n, counted: level.cost(s), ahlfors: 0.0, slab: 0.0, decay: 0.0 };
    for center in level.centers.iter().filter(|c| !c.t.is_empty()) {
        for y in &center.t {
            links.ahlfors += nu.measure(&Ball::new(y.clone(), r)?, depth)?.lower * scale;
        }
        let big = Ball::new(center.x.clone(), 2.0 * level.rho)?;
        let region = Intersection(vec![Box::new(big.clone()), center.target.thickening(2.0 * r)?]);
        links.slab += nu.measure(&region, depth)?.upper * outer;
        links.decay += nu.measure(&big, depth)?.upper * eps_beta * outer;
    }
    Ok(links)
}

#[derive(Clone, Debug, Serialize)]
pub struct MdpCheck {
    #[serde(serialize_with = "crate::exact::ser_rational")]
    pub mass: Rational,
    pub box_dimension: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub scales: Vec<f64>,
    /// Occupied cells, averaged over shifted grids.
    pub counts: Vec<f64>,
    pub passes: bool,
}

/// Box-count dimension of a finite cylinder union, compared with `δ`.
///
/// Scales are `e·2^{−j}` for `j = 3..=scales+2`, `e` the smallest cylinder diameter.
pub fn mdp_lower_check<F: IntervalMap>(
    nu: &Pushforward<F>,
    cylinders: &[Vec<usize>],
    delta: f64,
    tolerance: f64,
    scales: usize,
) -> Result<MdpCheck> {
    let mu = nu.source();
    let mut mass = Rational::zero();
    for w in cylinders {
        mass += mu.cylinder_measure(w)?;
    }
    if cylinders.is_empty() || mass.is_zero() {
        return Err(Error::InvalidInput("cylinder union has zero mass".into()));
    }
    if scales < 2 {
        return Err(Error::InvalidInput("need at least two scales".into()));
    }
    let boxes: Vec<Vec<Interval>> =
        cylinders.iter().map(|w| Ok(nu.map().eval_box(&mu.cylinder_box(w)?))).collect::<Result<Vec<_>>>()?;
    let extent = boxes
        .iter()
        .map(|b| b.iter().map(|i| (i.hi - i.lo).powi(2)).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min);
    let scale_list: Vec<f64> = (3..scales as i32 + 3).map(|j| extent * 0.5f64.powi(j)).collect();
    let finest = *scale_list.last().expect("nonempty");
    let mut points = Vec::new();
    for w in cylinders {
        points.extend(support_points(nu, w, finest / 4.0, &|_, _| true)?.into_iter().map(|(_, y)| y));
    }
    let mut counts = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &e in &scale_list {
        // mean over diagonally shifted grids
        let mut total = 0usize;
        for k in 0..GRID_SHIFTS {
            let shift = e * k as f64 / GRID_SHIFTS as f64;
            let mut cells: Vec<Vec<i64>> =
                points.iter().map(|p| p.iter().map(|v| ((v + shift) / e).floor() as i64).collect()).collect();
            cells.sort_unstable();
            cells.dedup();
            total += cells.len();
        }
        let mean = total as f64 / GRID_SHIFTS as f64;
        counts.push(mean);
        xs.push((1.0 / e).ln());
        ys.push(mean.ln());
    }
    let box_dimension = line_fit(&xs, &ys).map(|f| f.slope).unwrap_or(0.0);
    Ok(MdpCheck {
        mass,
        box_dimension,
        delta,
        tolerance,
        scales: scale_list,
        counts,
        passes: box_dimension >= delta - tolerance,
    })
}

/// `κ/(2ρ_n)` as a float, for reports.
pub fn height_cap(kappa: &Rational, n: u32) -> f64 {
    to_f64(kappa) * 2f64.powi(n as i32) / 2.0
}
