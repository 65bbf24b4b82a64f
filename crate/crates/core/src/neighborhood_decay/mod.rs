//! Decay of measures near graphs, quadrics, chart-pulled slices and under nonsingular maps.

mod maps;

pub use maps::{NonsingularMap, QuadraticMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::exact::{int, to_f64, Rational};
use crate::fractal_measures::region::{HyperplaneSlab, RealQuadric};
use crate::fractal_measures::{
    check_eps, fit_decay_alpha, fit_envelope, ratio_row, Ball, Chart, Containment, DecayFit, DecayProfile, DecayRow,
    Depth, EnvelopePoint, HyperplaneSampler, IntervalMap, MeasureHandle, Preimage, Pushforward, Region,
    SelfSimilarMeasure,
};
use crate::interval::Interval;

/// The function whose graph is the obstacle.
#[derive(Clone, Debug)]
pub enum GraphFn {
    /// `f(u) = uᵀAu + bᵀu + c`.
    Quadratic(RealQuadric),
    /// `f(u) = sqrt(q(u))`, with `q > 0` on the base set.
    SqrtQuadratic(RealQuadric),
}

/// Graph of `f` over a base box `S ⊂ R^{k−1}`.
#[derive(Clone, Debug)]
pub struct GraphPatch {
    f: GraphFn,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Boxes are convex, so paths inside `S` have length equal to the distance.
    pub k1: f64,
    pub k2: f64,
    hessian_norm: f64,
    graph: RealQuadric,
}

impl GraphPatch {
    pub fn new(f: GraphFn, lower: Vec<f64>, upper: Vec<f64>, k2: f64) -> Result<Self> {
        let base = match &f {
            GraphFn::Quadratic(q) | GraphFn::SqrtQuadratic(q) => q,
        };
        let m = base.dim();
        check_dim(m, lower.len())?;
        check_dim(m, upper.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidInput("empty base box".into()));
        }
        if !(k2 > 0.0) {
            return Err(Error::InvalidInput("curvature budget must be positive".into()));
        }
        let s: Vec<Interval> = lower.iter().zip(&upper).map(|(&l, &u)| Interval::new(l, u)).collect();
        let hessian_norm = match &f {
            GraphFn::Quadratic(q) => {
                let (a, _, _) = q.parts();
                a.iter().flatten().fold(Interval::ZERO, |acc, v| acc + (Interval::from_rational(v) * 2.0).sqr()).hi.sqrt().next_up()
            }
            GraphFn::SqrtQuadratic(q) => sqrt_hessian_bound(q, &s)?,
        };
        let (a, b, c) = base.parts();
        let k = m + 1;
        let mut ga = vec![vec![int(0); k]; k];
        let mut gb = vec![int(0); k];
        for i in 0..m {
            for j in 0..m {
                ga[i][j] = -a[i][j].clone();
            }
            gb[i] = -b[i].clone();
        }
        match f {
            GraphFn::Quadratic(_) => gb[m] = int(1),
            GraphFn::SqrtQuadratic(_) => ga[m][m] = int(1),
        }
        let graph = RealQuadric::new(ga, gb, -c.clone())?;
        Ok(GraphPatch { f, lower, upper, k1: 1.0, k2, hessian_norm, graph })
    }

    /// Horizontal segment `y = c` over `[lo, hi]`.
    pub fn constant(c: Rational, lo: f64, hi: f64) -> Result<Self> {
        let f = RealQuadric::new(vec![vec![int(0)]], vec![int(0)], c)?;
        GraphPatch::new(GraphFn::Quadratic(f), vec![lo], vec![hi], 1.0)
    }

    /// `y = x²` over `[lo, hi]`.
    pub fn parabola(lo: f64, hi: f64, k2: f64) -> Result<Self> {
        let f = RealQuadric::new(vec![vec![int(1)]], vec![int(0)], int(0))?;
        GraphPatch::new(GraphFn::Quadratic(f), vec![lo], vec![hi], k2)
    }

    pub fn dim(&self) -> usize {
        self.lower.len() + 1
    }

    pub fn function(&self) -> &GraphFn {
        &self.f
    }

    /// Upper bound for `‖f''‖` on `S`.
    pub fn hessian_norm(&self) -> f64 {
        self.hessian_norm
    }

    /// `K2 / ‖f''‖_S`.
    pub fn max_scale(&self) -> f64 {
        if self.hessian_norm == 0.0 {
            f64::INFINITY
        } else {
            self.k2 / self.hessian_norm
        }
    }

    /// The closed `w`-neighborhood of the graph.
    pub fn slab(&self, w: f64) -> Result<GraphSlab> {
        Ok(GraphSlab { patch: self.clone(), inner: self.graph.slab(w)?, w })
    }

    fn distance_estimate(&self, x: &[f64]) -> f64 {
        let m = self.lower.len();
        let gap: f64 = (0..m).map(|i| (self.lower[i] - x[i]).max(x[i] - self.upper[i]).max(0.0).powi(2)).sum::<f64>().sqrt();
        let p = self.graph.eval_f64(x);
        let g = self.graph.gradient_f64(x).iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut d = if g > 0.0 { p.abs() / g } else { p.abs().sqrt() };
        if matches!(self.f, GraphFn::SqrtQuadratic(_)) && x[m] < 0.0 {
            d = d.max(-x[m]);
        }
        d.max(gap)
    }
}

fn sqrt_hessian_bound(q: &RealQuadric, s: &[Interval]) -> Result<f64> {
    let m = s.len();
    let per = ((1024f64).powf(1.0 / m as f64)).floor().max(1.0) as usize;
    let (a, _, _) = q.parts();
    let mut worst = 0.0f64;
    for idx in 0..per.pow(m as u32) {
        let cell: Vec<Interval> = (0..m)
            .map(|i| {
                let j = idx / per.pow(i as u32) % per;
                let w = (s[i].hi - s[i].lo) / per as f64;
                Interval::new((s[i].lo + w * j as f64).next_down().max(s[i].lo), (s[i].lo + w * (j + 1) as f64).next_up().min(s[i].hi))
            })
            .collect();
        let v = q.eval_interval(&cell);
        if v.lo <= 0.0 {
            return Err(Error::InvalidInput("square-root graph needs q > 0 on the base set".into()));
        }
        let g = q.gradient_interval(&cell);
        let root = v.sqrt().expect("positive");
        let v32 = v * root;
        let mut norm2 = Interval::ZERO;
        for i in 0..m {
            for j in 0..m {
                let h = (Interval::from_rational(&a[i][j]) * 2.0).div(root * 2.0).expect("positive")
                    - (g[i] * g[j]).div(v32 * 4.0).expect("positive");
                norm2 = norm2 + Interval::point(h.mag()).sqr();
            }
        }
        worst = worst.max(norm2.hi.sqrt().next_up());
    }
    Ok(worst)
}

/// `Γ^(w)`: certified against the unrestricted graph, then restricted to the base set.
pub struct GraphSlab {
    patch: GraphPatch,
    inner: Box<dyn Region + Send + Sync>,
    w: f64,
}

impl Region for GraphSlab {
    fn dim(&self) -> usize {
        self.patch.dim()
    }
    fn classify(&self, bx: &[Interval]) -> Containment {
        let m = self.patch.lower.len();
        let w = self.w;
        let gap = (0..m).fold(Interval::ZERO, |acc, i| {
            let g = (self.patch.lower[i] - bx[i].hi).max(bx[i].lo - self.patch.upper[i]).max(0.0);
            acc + Interval::point(g).sqr()
        });
        if gap.lo > w * w {
            return Containment::Outside;
        }
        let sqrt_graph = matches!(self.patch.f, GraphFn::SqrtQuadratic(_));
        if sqrt_graph && bx[m].hi < -w {
            return Containment::Outside;
        }
        match self.inner.classify(bx) {
            Containment::Outside => Containment::Outside,
            Containment::Unknown => Containment::Unknown,
            Containment::Inside => {
                // the certifying graph point lies within w of the box, so its base point stays in S
                let base_ok = (0..m).all(|i| bx[i].lo - w >= self.patch.lower[i] && bx[i].hi + w <= self.patch.upper[i]);
                if base_ok && (!sqrt_graph || bx[m].lo > w) {
                    Containment::Inside
                } else {
                    Containment::Unknown
                }
            }
        }
    }
    fn scale(&self) -> f64 {
        self.w
    }
}

/// What a decay experiment thickens.
#[derive(Clone, Debug)]
pub enum Obstacle {
    Hyperplane { normal: Vec<f64>, offset: f64 },
    Graph(GraphPatch),
    Quadric(RealQuadric),
}

impl Obstacle {
    pub fn dim(&self) -> usize {
        match self {
            Obstacle::Hyperplane { normal, .. } => normal.len(),
            Obstacle::Graph(g) => g.dim(),
            Obstacle::Quadric(q) => q.dim(),
        }
    }

    pub fn thickening(&self, w: f64) -> Result<Box<dyn Region + Send + Sync>> {
        Ok(match self {
            Obstacle::Hyperplane { normal, offset } => Box::new(HyperplaneSlab::new(normal.clone(), *offset, w)?),
            Obstacle::Graph(g) => Box::new(g.slab(w)?),
            Obstacle::Quadric(q) => q.slab(w)?,
        })
    }

    /// First-order distance estimate, used only to place sample balls.
    pub fn distance_estimate(&self, x: &[f64]) -> f64 {
        match self {
            Obstacle::Hyperplane { normal, offset } => {
                let n = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
                (normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - offset).abs() / n
            }
            Obstacle::Graph(g) => g.distance_estimate(x),
            Obstacle::Quadric(q) => {
                let p = q.eval_f64(x);
                let g = q.gradient_f64(x).iter().map(|v| v * v).sum::<f64>().sqrt();
                if g > 0.0 {
                    p.abs() / g
                } else {
                    p.abs().sqrt()
                }
            }
        }
    }
}

/// How sample balls are chosen.
#[derive(Clone, Debug, Serialize)]
pub enum BallPlan {
    Fixed(Vec<(Vec<f64>, f64)>),
    /// The `samples` support points closest to the obstacle among `tries` draws, at each radius.
    NearObstacle { samples: usize, radii: Vec<f64>, tries: usize, seed: u64 },
}

impl BallPlan {
    pub fn radii(&self) -> Vec<f64> {
        match self {
            BallPlan::Fixed(b) => b.iter().map(|(_, r)| *r).collect(),
            BallPlan::NearObstacle { radii, .. } => radii.clone(),
        }
    }

    fn balls(&self, mu: &dyn MeasureHandle, obstacle: &dyn Fn(&[f64]) -> f64) -> Vec<(Vec<f64>, f64)> {
        match self {
            BallPlan::Fixed(b) => b.clone(),
            BallPlan::NearObstacle { samples, radii, tries, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut pts: Vec<(f64, Vec<f64>)> = (0..(*tries).max(*samples))
                    .map(|_| {
                        let (_, x) = mu.sample_support(&mut rng);
                        (obstacle(&x), x)
                    })
                    .collect();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut chosen: Vec<Vec<f64>> = Vec::new();
                for (_, x) in pts {
                    if chosen.len() == *samples {
                        break;
                    }
                    if chosen.iter().all(|c| c.iter().zip(&x).any(|(a, b)| a != b)) {
                        chosen.push(x);
                    }
                }
                chosen.into_iter().flat_map(|x| radii.iter().map(move |&r| (x.clone(), r))).collect()
            }
        }
    }
}

/// A measure, a ball plan and an `ε` grid.
pub struct DecayExperiment<'a> {
    pub measure: &'a dyn MeasureHandle,
    pub balls: BallPlan,
    pub eps: Vec<f64>,
    pub depth: Depth,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub label: String,
    pub alpha_hat: f64,
    pub alpha_envelope: f64,
    pub beta: f64,
    /// `max R(ε)/ε^β` over all rows.
    pub constant: f64,
    pub max_ratio: f64,
    pub envelope: Vec<EnvelopePoint>,
    pub rows: Vec<DecayRow>,
}

impl DecayReport {
    fn from_fit(label: String, fit: DecayFit, beta: f64) -> Self {
        DecayReport {
            label,
            alpha_hat: fit.alpha_hat,
            alpha_envelope: fit.alpha_envelope,
            beta,
            constant: fit.constant(beta),
            max_ratio: fit.rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
            envelope: fit.envelope,
            rows: fit.rows,
        }
    }

    /// Brackets are consistent with `R` non-decreasing in `ε` for each ball and obstacle.
    pub fn monotone_in_eps(&self) -> bool {
        self.rows.iter().all(|a| {
            self.rows
                .iter()
                .filter(|b| b.sample == a.sample && b.obstacle == a.obstacle && b.eps > a.eps)
                .all(|b| a.lower <= b.upper)
        })
    }
}

impl DecayExperiment<'_> {
    fn check(&self, obstacle: &Obstacle) -> Result<()> {
        check_eps(&self.eps)?;
        check_dim(self.measure.ambient_dim(), obstacle.dim())
    }

    /// Ratios against one obstacle, or a family measured on the same balls.
    pub fn run(&self, label: &str, obstacle: &Obstacle, beta: f64) -> Result<DecayReport> {
        self.check(obstacle)?;
        let balls = self.balls.balls(self.measure, &|x| obstacle.distance_estimate(x));
        let obstacles = |_: &[f64], rho: f64, e: f64| -> Result<Vec<Box<dyn Region + Send + Sync>>> {
            Ok(vec![obstacle.thickening(e * rho)?])
        };
        let rows = crate::fractal_measures::decay_rows(self.measure, &balls, &obstacles, &self.eps, self.depth)?;
        Ok(DecayReport::from_fit(label.to_string(), fit_envelope(rows, &self.eps)?, beta))
    }
}

/// Decay near a graph patch, at radii within the curvature budget.
pub fn run_graph_decay(exp: &DecayExperiment<'_>, patch: &GraphPatch, beta: f64) -> Result<DecayReport> {
    let cap = patch.max_scale();
    if let Some(r) = exp.balls.radii().into_iter().find(|&r| r > cap) {
        return Err(Error::InvalidInput(format!("radius {r} exceeds the curvature budget K2/‖f''‖ = {cap}")));
    }
    exp.run("graph", &Obstacle::Graph(patch.clone()), beta)
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadricRow {
    pub label: String,
    pub alpha_hat: f64,
    pub constant: f64,
    pub max_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadricTable {
    pub rows: Vec<QuadricRow>,
    pub max_constant: f64,
    pub min_constant: f64,
    /// `max_constant / min_constant`.
    pub spread: f64,
    pub reports: Vec<DecayReport>,
}

impl QuadricTable {
    pub fn uniform_within(&self, factor: f64) -> bool {
        self.spread <= factor
    }
}

/// Decay near each quadric of a family, with the spread of the implied constants.
pub fn run_quadric_decay(exp: &DecayExperiment<'_>, quadrics: &[(String, RealQuadric)], beta: f64) -> Result<QuadricTable> {
    if quadrics.is_empty() {
        return Err(Error::InvalidInput("empty quadric family".into()));
    }
    if let Some(r) = exp.balls.radii().into_iter().find(|&r| r > 1.0) {
        return Err(Error::InvalidInput(format!("radius {r} exceeds 1")));
    }
    let mut reports = Vec::new();
    for (label, q) in quadrics {
        reports.push(exp.run(label, &Obstacle::Quadric(q.clone()), beta)?);
    }
    let rows: Vec<QuadricRow> = reports
        .iter()
        .map(|r| QuadricRow { label: r.label.clone(), alpha_hat: r.alpha_hat, constant: r.constant, max_ratio: r.max_ratio })
        .collect();
    let max_constant = rows.iter().map(|r| r.constant).fold(0.0, f64::max);
    let min_constant = rows.iter().map(|r| r.constant).filter(|&c| c > 0.0).fold(f64::INFINITY, f64::min);
    let spread = if min_constant.is_finite() { max_constant / min_constant } else { 1.0 };
    Ok(QuadricTable { rows, max_constant, min_constant, spread, reports })
}

#[derive(Clone, Debug, Serialize)]
pub struct PushforwardDecay {
    pub alpha_hat: f64,
    pub source_beta: f64,
    pub c0: f64,
    pub c1: f64,
    pub rho_cap: f64,
    pub meets_beta: bool,
    /// `alpha_hat >= 0.9·β` of the source.
    pub meets_relaxed: bool,
    pub fit: DecayFit,
}

/// Hyperplane decay of `Φ[μ]`, at radii below `1/(2·c0·c1)`.
#[allow(clippy::too_many_arguments)]
pub fn run_pushforward_decay<F: NonsingularMap + Clone>(
    phi: &F,
    mu: &SelfSimilarMeasure,
    source: &DecayProfile,
    sampler: &HyperplaneSampler,
    eps: &[f64],
    samples: usize,
    radii: &[f64],
    depth: Depth,
    seed: u64,
) -> Result<PushforwardDecay> {
    let cap = phi.rho_cap();
    if let Some(r) = radii.iter().find(|&&r| r > cap) {
        return Err(Error::InvalidInput(format!("radius {r} exceeds the scale cap 1/(2·c0·c1) = {cap}")));
    }
    let nu = Pushforward::new(mu.clone(), phi.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fit = fit_decay_alpha(&nu, sampler, eps, samples, radii, depth, &mut rng)?;
    Ok(PushforwardDecay {
        alpha_hat: fit.alpha_hat,
        source_beta: source.beta,
        c0: phi.c0(),
        c1: phi.c1(),
        rho_cap: cap,
        meets_beta: fit.alpha_hat >= source.beta,
        meets_relaxed: fit.alpha_hat >= 0.9 * source.beta,
        fit,
    })
}

/// The chart preimage of `{x ∈ Z : ⟨n, x⟩ = t}` in chart coordinates.
///
/// Substituting `x_e = (t − ⟨n', u⟩)/n_e` gives a quadric in `u`; when `n_e = 0` it is the hyperplane `⟨n', u⟩ = t`.
pub fn pull_back_slice(chart: &Chart, normal: &[Rational], offset: &Rational) -> Result<Obstacle> {
    let d = chart.quadric().dim();
    check_dim(d, normal.len())?;
    let e = chart.eliminated();
    let n_u: Vec<Rational> = (0..d).filter(|&i| i != e).map(|i| normal[i].clone()).collect();
    let n_e = &normal[e];
    if num_traits::Zero::is_zero(n_e) {
        if n_u.iter().all(num_traits::Zero::is_zero) {
            return Err(Error::InvalidInput("hyperplane normal is zero".into()));
        }
        return Ok(Obstacle::Hyperplane { normal: n_u.iter().map(to_f64).collect(), offset: to_f64(offset) });
    }
    let k = d - 1;
    // x = M u + m0
    let mut mm = vec![vec![int(0); k]; d];
    let mut m0 = vec![int(0); d];
    let mut col = 0;
    for (i, row) in mm.iter_mut().enumerate() {
        if i == e {
            for (j, v) in row.iter_mut().enumerate() {
                *v = -&n_u[j] / n_e;
            }
            m0[i] = offset / n_e;
        } else {
            row[col] = int(1);
            col += 1;
        }
    }
    let (a, b, c) = chart.quadric().parts();
    let am: Vec<Vec<Rational>> = (0..d).map(|i| (0..k).map(|j| (0..d).map(|l| &a[i][l] * &mm[l][j]).sum()).collect()).collect();
    let qa: Vec<Vec<Rational>> = (0..k).map(|i| (0..k).map(|j| (0..d).map(|l| &mm[l][i] * &am[l][j]).sum()).collect()).collect();
    let am0: Vec<Rational> = (0..d).map(|i| (0..d).map(|l| &a[i][l] * &m0[l]).sum()).collect();
    let qb: Vec<Rational> = (0..k)
        .map(|j| (0..d).map(|l| int(2) * &am0[l] * &mm[l][j] + &b[l] * &mm[l][j]).sum())
        .collect();
    let qc: Rational = (0..d).map(|l| &m0[l] * &am0[l] + &b[l] * &m0[l]).sum::<Rational>() + c;
    Ok(Obstacle::Quadric(RealQuadric::new(qa, qb, qc)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceReport {
    pub normal: Vec<String>,
    pub offset: String,
    pub report: DecayReport,
}

/// Decay of `ν` near `L ∩ Z` for each hyperplane, measured in chart coordinates.
///
/// The pulled-back thickening of width `ερ` contains the chart preimage of `(L ∩ Z)^(ερ)`,
/// because the inverse chart is a 1-Lipschitz projection; balls are exact preimages of `ν`-balls.
pub fn run_chart_slice_decay(
    nu: &Pushforward<Chart>,
    hyperplanes: &[(Vec<Rational>, Rational)],
    plan: &BallPlan,
    eps: &[f64],
    depth: Depth,
    beta: f64,
) -> Result<Vec<SliceReport>> {
    check_eps(eps)?;
    let chart = nu.map();
    let mu = nu.source();
    let mut out = Vec::new();
    for (normal, offset) in hyperplanes {
        let pulled = pull_back_slice(chart, normal, offset)?;
        // place balls by the chart-coordinate distance of their centers
        let chart_balls = plan.balls(mu, &|u| pulled.distance_estimate(u));
        let mut rows = Vec::new();
        for (i, (u, rho)) in chart_balls.iter().enumerate() {
            let ball = Ball::new(chart.eval(u), *rho)?;
            let pre = Preimage { region: &ball, map: chart };
            let den = mu.measure_of_set(&pre, depth)?;
            if den.lower <= 0.0 {
                return Err(Error::LooseBracket { lower: den.lower, upper: den.upper });
            }
            for &e in eps {
                let slab = pulled.thickening(e * rho)?;
                let region = PreimageAnd { ball: &ball, chart, rho: *rho, slab };
                let num = mu.measure_of_set(&region, depth)?;
                rows.push(ratio_row(i, 0, *rho, e, num, den));
            }
        }
        let fit = fit_envelope(rows, eps)?;
        out.push(SliceReport {
            normal: normal.iter().map(crate::exact::format_rational).collect(),
            offset: crate::exact::format_rational(offset),
            report: DecayReport::from_fit("chart-slice".into(), fit, beta),
        });
    }
    Ok(out)
}

/// `Ψ⁻¹(B) ∩ S`.
struct PreimageAnd<'a> {
    ball: &'a Ball,
    chart: &'a Chart,
    rho: f64,
    slab: Box<dyn Region + Send + Sync>,
}

impl Region for PreimageAnd<'_> {
    fn dim(&self) -> usize {
        self.chart.source_dim()
    }
    fn classify(&self, bx: &[Interval]) -> Containment {
        match self.slab.classify(bx) {
            Containment::Outside => Containment::Outside,
            inner => match (self.ball.classify(&self.chart.eval_box(bx)), inner) {
                (Containment::Outside, _) => Containment::Outside,
                (Containment::Inside, Containment::Inside) => Containment::Inside,
                _ => Containment::Unknown,
            },
        }
    }
    fn scale(&self) -> f64 {
        (self.rho / self.chart.lipschitz()).min(self.slab.scale())
    }
}
