//! Exponent fits from certified ball and slab measures.

use rand::{Rng, RngCore};
use serde::Serialize;

use super::region::{Ball, HyperplaneSlab, Intersection, Region};
use super::{Depth, MassInterval, MeasureHandle};
use crate::error::{Error, Result};
use crate::stats::{grouped_slope, weighted_line_fit};

/// `count` scales `base·ratio^j`, `j = 0..count`.
pub fn commensurate_scales(base: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| base * ratio.powi(j as i32)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct BallRow {
    pub sample: usize,
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AhlforsFit {
    pub delta: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub rows: Vec<BallRow>,
}

/// Support-centered balls at each radius: `samples × radii`, sample-major.
pub fn support_balls(mu: &dyn MeasureHandle, samples: usize, rng: &mut dyn RngCore) -> Vec<(Vec<u8>, Vec<f64>)> {
    (0..samples).map(|_| mu.sample_support(rng)).collect()
}

fn check_scales(mu: &dyn MeasureHandle, scales: &[f64]) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::InvalidInput("no scales given".into()));
    }
    let rho0 = mu.rho0();
    if let Some(s) = scales.iter().find(|&&s| !(s > 0.0 && s <= rho0)) {
        return Err(Error::InvalidInput(format!("scale {s} outside (0, rho0 = {rho0}]")));
    }
    Ok(())
}

/// Pooled slope of `ln μ(B(x, ρ))` against `ln ρ` over support-centered balls.
pub fn fit_ahlfors_delta(
    mu: &dyn MeasureHandle,
    samples: usize,
    scales: &[f64],
    depth: Depth,
    rng: &mut dyn RngCore,
) -> Result<AhlforsFit> {
    check_scales(mu, scales)?;
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be positive".into()));
    }
    let centers = support_balls(mu, samples, rng);
    let mut rows = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, (_, x)) in centers.iter().enumerate() {
        for &rho in scales {
            let m = mu.measure(&Ball::new(x.clone(), rho)?, depth)?;
            if m.lower <= 0.0 {
                return Err(Error::LooseBracket { lower: m.lower, upper: m.upper });
            }
            xs.push(rho.ln());
            ys.push(m.mid().ln());
            rows.push(BallRow { sample: i, rho, lower: m.lower, upper: m.upper });
        }
    }
    let fit = weighted_line_fit(&xs, &ys, &vec![1.0; xs.len()])
        .ok_or_else(|| Error::InvalidInput("need at least two distinct scales".into()))?;
    Ok(AhlforsFit { delta: fit.slope, intercept: fit.intercept, max_residual: fit.max_residual, rows })
}

/// Max over samples and scales of `μ(B(x, 2ρ)) / μ(B(x, ρ))`, from bracket midpoints.
pub fn check_federer(
    mu: &dyn MeasureHandle,
    samples: usize,
    scales: &[f64],
    depth: Depth,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    check_scales(mu, scales)?;
    let mut worst = 0.0f64;
    for (_, x) in support_balls(mu, samples, rng) {
        for &rho in scales {
            let small = mu.measure(&Ball::new(x.clone(), rho)?, depth)?;
            let big = mu.measure(&Ball::new(x.clone(), 2.0 * rho)?, depth)?;
            if small.lower <= 0.0 {
                return Err(Error::LooseBracket { lower: small.lower, upper: small.upper });
            }
            worst = worst.max(big.mid() / small.mid());
        }
    }
    Ok(worst)
}

/// One `(ball, obstacle, ε)` measurement of `R(ε) = μ(B ∩ S^(ερ)) / μ(B)`.
#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub sample: usize,
    pub obstacle: usize,
    pub rho: f64,
    pub eps: f64,
    pub lower: f64,
    pub upper: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopePoint {
    pub eps: f64,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    /// Common slope of `ln max_L R(ε)` against `ln ε` across balls, each ball with its own constant.
    /// `+∞` when every ratio vanishes.
    pub alpha_hat: f64,
    /// Slope of the envelope taken over all balls at once.
    pub alpha_envelope: f64,
    pub ball_slopes: Vec<f64>,
    pub envelope: Vec<EnvelopePoint>,
    pub rows: Vec<DecayRow>,
}

impl DecayFit {
    /// `max R(ε)/ε^β` over all rows.
    pub fn constant(&self, beta: f64) -> f64 {
        self.rows.iter().map(|r| r.ratio / r.eps.powf(beta)).fold(0.0, f64::max)
    }
}

/// Ball plus obstacle thickenings for a given `ε`; obstacle order must not depend on `ε`.
pub type ObstacleFn<'a> = dyn Fn(&[f64], f64, f64) -> Result<Vec<Box<dyn Region + Send + Sync>>> + 'a;

/// Ratio brackets for every ball, obstacle and `ε`.
pub fn decay_rows(
    mu: &dyn MeasureHandle,
    balls: &[(Vec<f64>, f64)],
    obstacles: &ObstacleFn<'_>,
    eps: &[f64],
    depth: Depth,
) -> Result<Vec<DecayRow>> {
    check_eps(eps)?;
    let mut rows = Vec::new();
    for (i, (x, rho)) in balls.iter().enumerate() {
        let ball = Ball::new(x.clone(), *rho)?;
        let den = mu.measure(&ball, depth)?;
        if den.lower <= 0.0 {
            return Err(Error::LooseBracket { lower: den.lower, upper: den.upper });
        }
        for &e in eps {
            for (j, obs) in obstacles(x, *rho, e)?.into_iter().enumerate() {
                let region = Intersection(vec![Box::new(ball.clone()), obs]);
                let num = mu.measure(&region, depth)?;
                rows.push(ratio_row(i, j, *rho, e, num, den));
            }
        }
    }
    Ok(rows)
}

pub(crate) fn ratio_row(sample: usize, obstacle: usize, rho: f64, eps: f64, num: MassInterval, den: MassInterval) -> DecayRow {
    DecayRow {
        sample,
        obstacle,
        rho,
        eps,
        lower: (num.lower / den.upper).min(1.0),
        upper: (num.upper / den.lower).min(1.0),
        ratio: (num.mid() / den.mid()).clamp(0.0, 1.0),
    }
}

pub(crate) fn check_eps(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidInput("epsilons must lie in (0, 1]".into()));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("epsilon grid must be strictly decreasing".into()));
    }
    Ok(())
}

fn log_weight(lower: f64, upper: f64) -> f64 {
    let w = if lower > 0.0 { (upper / lower).ln() } else { f64::INFINITY };
    1.0 / w.clamp(0.01, 10.0)
}

type Group = (Vec<f64>, Vec<f64>, Vec<f64>);

fn envelope_of<'a>(rows: impl Iterator<Item = &'a DecayRow> + Clone, eps: &[f64]) -> Vec<EnvelopePoint> {
    eps.iter()
        .filter_map(|&e| {
            rows.clone()
                .filter(|r| r.eps == e)
                .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
                .map(|r| EnvelopePoint { eps: e, ratio: r.ratio, lower: r.lower, upper: r.upper })
        })
        .collect()
}

fn group_of(env: &[EnvelopePoint]) -> Group {
    let pos: Vec<&EnvelopePoint> = env.iter().filter(|p| p.ratio > 0.0 && p.eps < 1.0).collect();
    (
        pos.iter().map(|p| p.eps.ln()).collect(),
        pos.iter().map(|p| p.ratio.ln()).collect(),
        pos.iter().map(|p| log_weight(p.lower, p.upper)).collect(),
    )
}

/// Exponent fits from ratio rows, weighted by inverse log-bracket width.
pub fn fit_envelope(rows: Vec<DecayRow>, eps: &[f64]) -> Result<DecayFit> {
    let envelope = envelope_of(rows.iter(), eps);
    let mut samples: Vec<usize> = rows.iter().map(|r| r.sample).collect();
    samples.sort_unstable();
    samples.dedup();
    let groups: Vec<Group> = samples.iter().map(|&s| group_of(&envelope_of(rows.iter().filter(|r| r.sample == s), eps))).collect();
    let ball_slopes: Vec<f64> =
        groups.iter().filter_map(|(x, y, w)| weighted_line_fit(x, y, w).map(|f| f.slope)).collect();
    let (gx, gy, gw) = group_of(&envelope);
    if gx.is_empty() {
        return Ok(DecayFit { alpha_hat: f64::INFINITY, alpha_envelope: f64::INFINITY, ball_slopes, envelope, rows });
    }
    let diag = || Error::Diagnostic("decay envelope has fewer than two usable epsilons".into());
    let alpha_envelope = weighted_line_fit(&gx, &gy, &gw).ok_or_else(diag)?.slope;
    let alpha_hat = grouped_slope(&groups).ok_or_else(diag)?;
    Ok(DecayFit { alpha_hat, alpha_envelope, ball_slopes, envelope, rows })
}

/// Hyperplanes through a ball center and through nearby support points.
#[derive(Clone, Debug, Serialize)]
pub struct HyperplaneSampler {
    /// Normal directions per anchor (ignored in dimension 1).
    pub directions: usize,
    /// Support points near the center used as extra anchors.
    pub nearby: usize,
}

impl Default for HyperplaneSampler {
    fn default() -> Self {
        HyperplaneSampler { directions: 6, nearby: 4 }
    }
}

impl HyperplaneSampler {
    /// Anchors and unit normals for the ball `B(x, ρ)` whose center has the cylinder word `word`.
    pub fn planes(
        &self,
        mu: &dyn MeasureHandle,
        word: &[u8],
        x: &[f64],
        rho: f64,
        rng: &mut dyn RngCore,
    ) -> Vec<(Vec<f64>, f64)> {
        let k = x.len();
        let mut anchors = vec![x.to_vec()];
        if let Some(r) = mu.common_ratio() {
            // cylinders of this depth around x have diameter below ρ
            let depth = ((rho / mu.rho0()).ln() / r.ln()).ceil().max(0.0) as usize;
            for _ in 0..self.nearby {
                let (tail, _) = mu.sample_support(rng);
                let mut w: Vec<u8> = word.iter().take(depth).copied().collect();
                w.extend(tail.iter().skip(w.len()));
                anchors.push(mu.point_of_word(&w));
            }
        }
        let normals: Vec<Vec<f64>> = match k {
            1 => vec![vec![1.0]],
            2 => (0..self.directions.max(1))
                .map(|j| {
                    let t = std::f64::consts::PI * j as f64 / self.directions.max(1) as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect(),
            _ => (0..self.directions.max(1))
                .map(|_| {
                    let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
                    v.iter().map(|a| a / n).collect()
                })
                .collect(),
        };
        let mut out = Vec::new();
        for a in &anchors {
            for n in &normals {
                out.push((n.clone(), n.iter().zip(a).map(|(u, v)| u * v).sum()));
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayProfile {
    pub alpha_hat: f64,
    pub beta: f64,
    pub delta: f64,
    pub federer_constant: f64,
}

impl DecayProfile {
    /// `beta` defaults to `0.9·alpha_hat`.
    pub fn new(alpha_hat: f64, delta: f64, federer_constant: f64, beta: Option<f64>, k: usize) -> Result<Self> {
        let beta = beta.unwrap_or(0.9 * alpha_hat);
        if !(beta > 0.0 && beta < alpha_hat) {
            return Err(Error::Diagnostic(format!("need 0 < beta < alpha_hat, got beta = {beta}, alpha_hat = {alpha_hat}")));
        }
        if !(delta > 0.0 && delta <= k as f64 + 0.05) {
            return Err(Error::Diagnostic(format!("delta = {delta} outside (0, {k}]")));
        }
        Ok(DecayProfile { alpha_hat, beta, delta, federer_constant })
    }
}

/// Decay against sampled hyperplanes, with `ε` thickenings relative to each radius.
pub fn fit_decay_alpha(
    mu: &dyn MeasureHandle,
    sampler: &HyperplaneSampler,
    eps: &[f64],
    samples: usize,
    radii: &[f64],
    depth: Depth,
    rng: &mut dyn RngCore,
) -> Result<DecayFit> {
    check_scales(mu, radii)?;
    check_eps(eps)?;
    let mut rows = Vec::new();
    let mut offset = 0;
    for (word, x) in support_balls(mu, samples, rng) {
        for &rho in radii {
            let planes = sampler.planes(mu, &word, &x, rho, rng);
            let obstacles = |_: &[f64], r: f64, e: f64| -> Result<Vec<Box<dyn Region + Send + Sync>>> {
                planes
                    .iter()
                    .map(|(n, t)| Ok(Box::new(HyperplaneSlab::new(n.clone(), *t, e * r)?) as Box<dyn Region + Send + Sync>))
                    .collect()
            };
            let mut part = decay_rows(mu, &[(x.clone(), rho)], &obstacles, eps, depth)?;
            for r in &mut part {
                r.sample = offset;
            }
            offset += 1;
            rows.extend(part);
        }
    }
    fit_envelope(rows, eps)
}

/// Ahlfors, decay and doubling estimates bundled into a profile.
#[allow(clippy::too_many_arguments)]
pub fn decay_profile(
    mu: &dyn MeasureHandle,
    sampler: &HyperplaneSampler,
    eps: &[f64],
    samples: usize,
    radii: &[f64],
    depth: Depth,
    beta: Option<f64>,
    rng: &mut dyn RngCore,
) -> Result<(DecayProfile, DecayFit)> {
    let fit = fit_decay_alpha(mu, sampler, eps, samples, radii, depth, rng)?;
    let delta = match mu.delta_exact() {
        Some(d) => d,
        None => fit_ahlfors_delta(mu, samples, radii, depth, rng)?.delta,
    };
    let federer = check_federer(mu, samples.min(4), radii, depth, rng)?;
    Ok((DecayProfile::new(fit.alpha_hat, delta, federer, beta, mu.ambient_dim())?, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal_measures::SelfSimilarMeasure;
    use rand::SeedableRng;

    #[test]
    fn profile_invariants() {
        assert!(DecayProfile::new(0.6, 0.6, 2.0, None, 1).is_ok());
        assert!(DecayProfile::new(0.6, 0.6, 2.0, Some(0.7), 1).is_err());
        assert!(DecayProfile::new(0.6, 1.5, 2.0, None, 1).is_err());
    }

    #[test]
    fn full_thickening_has_ratio_one() {
        let mu = SelfSimilarMeasure::square_tiling();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let s = HyperplaneSampler { directions: 3, nearby: 0 };
        let fit = fit_decay_alpha(&mu, &s, &[1.0, 0.5, 0.25], 2, &[0.25], Depth::Fixed(6), &mut rng).unwrap();
        for r in fit.rows.iter().filter(|r| r.eps == 1.0) {
            assert!(r.ratio <= 1.0 && r.lower <= 1.0);
            // a slab of half-width ρ through the center contains the ball
            if r.obstacle < 3 {
                assert_eq!(r.ratio, 1.0);
            }
        }
    }

    #[test]
    fn eps_grid_validation() {
        assert!(check_eps(&[0.5, 0.25]).is_ok());
        assert!(check_eps(&[0.25, 0.5]).is_err());
        assert!(check_eps(&[1.5]).is_err());
    }
}
