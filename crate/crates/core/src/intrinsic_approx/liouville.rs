//! Explicit very well approximable points: a nested chain of rational points, each within
//! `½·q_n^(−c)` of its predecessor.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{fit_omega, ApproximationRecord, OmegaEstimate};
use crate::error::{Error, Result};
use crate::exact::{f64_upper, int, le_inverse_power, ln_rational, ser_rational, Rational};
use crate::rational_geometry::{enumerate_points, Backend, EnumerationOptions, QuadraticHypersurface, RationalBox, RationalPoint};

#[derive(Clone, Debug)]
pub struct LiouvilleOptions {
    pub c_target: Rational,
    pub depth: usize,
    pub seed: u64,
    /// Denominator range for the random starting point.
    pub seed_q: (u64, u64),
    /// Largest multiple `k` of `gcd(G)` tried for `G·v`.
    pub k_max: u64,
    /// Extra parameters examined past the first admissible one along each search line.
    pub window: u64,
    /// Cap on the bit length of a search parameter.
    pub max_bits: u64,
}

impl LiouvilleOptions {
    pub fn new(c_target: Rational, depth: usize, seed: u64) -> Self {
        LiouvilleOptions { c_target, depth, seed, seed_q: (2, 30), k_max: 4, window: 8, max_bits: 1 << 16 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LiouvillePoint {
    /// Nearest-`f64` coordinates of the last witness.
    pub target: Vec<f64>,
    /// `r_0, …, r_depth`; the last one is the exact point the target rounds.
    pub witnesses: Vec<RationalPoint>,
    #[serde(serialize_with = "ser_rational")]
    pub c_target: Rational,
}

impl LiouvillePoint {
    pub fn limit(&self) -> &RationalPoint {
        self.witnesses.last().expect("chain is nonempty")
    }

    /// Records `r_n` against the exact limit, for `n < depth`.
    pub fn records(&self) -> Vec<ApproximationRecord> {
        let lim = self.limit();
        self.witnesses[..self.witnesses.len() - 1]
            .iter()
            .map(|r| {
                let e = r.max_dist(lim);
                ApproximationRecord {
                    target: self.target.clone(),
                    approximant: r.clone(),
                    q: r.denominator().clone(),
                    error: f64_upper(&e),
                    ln_error: ln_rational(&e).unwrap_or(f64::NEG_INFINITY),
                    exact_hit: false,
                }
            })
            .collect()
    }

    pub fn omega_estimate(&self, tail: usize) -> Result<OmegaEstimate> {
        let c = crate::exact::to_f64(&self.c_target);
        fit_omega(&self.target, self.records(), tail, Some(c), self.limit().denominator().clone())
    }
}

pub fn liouville_point(z: &QuadraticHypersurface, opts: &LiouvilleOptions) -> Result<LiouvillePoint> {
    if opts.c_target <= int(1) {
        return Err(Error::InvalidInput("c_target must exceed 1".into()));
    }
    if opts.depth == 0 {
        return Err(Error::InvalidInput("depth must be positive".into()));
    }
    let base = z.base_point().ok_or(Error::NoBasePoint)?.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let r0 = seed_point(z, &base, opts, &mut rng)?;
    let mut chain = vec![r0];
    while chain.len() <= opts.depth {
        let r = chain.last().unwrap();
        match next_point(z, r, opts) {
            Some(next) => chain.push(next),
            None => return Err(Error::SearchExhausted { achieved: chain.len() - 1 }),
        }
    }
    verify_witness_chain(z, &chain, &opts.c_target)?;
    Ok(LiouvillePoint { target: chain.last().unwrap().to_f64(), witnesses: chain, c_target: opts.c_target.clone() })
}

fn seed_point(
    z: &QuadraticHypersurface,
    base: &RationalPoint,
    opts: &LiouvilleOptions,
    rng: &mut ChaCha8Rng,
) -> Result<RationalPoint> {
    let (lo, hi) = opts.seed_q;
    let region = if z.bounding_box().is_some() { None } else { Some(RationalBox::cube(&base.coords(), &int(2))?) };
    let mut eo = EnumerationOptions::new(hi.max(1), Backend::BruteForce);
    eo.region = region;
    let pts: Vec<RationalPoint> =
        enumerate_points(z, &eo)?.into_iter().filter(|p| p.denominator() >= &BigInt::from(lo)).collect();
    Ok(pts.choose(rng).cloned().unwrap_or_else(|| base.clone()))
}

/// Integer `v` with `G·v = gcd(G) > 0`.
fn bezout(g: &[BigInt]) -> (BigInt, Vec<BigInt>) {
    let mut acc = BigInt::zero();
    let mut v = vec![BigInt::zero(); g.len()];
    for (i, gi) in g.iter().enumerate() {
        if gi.is_zero() {
            continue;
        }
        if acc.is_zero() {
            acc = gi.abs();
            v[i] = gi.signum();
            continue;
        }
        let e = acc.extended_gcd(gi);
        for x in v.iter_mut() {
            *x *= &e.x;
        }
        v[i] += &e.y;
        acc = e.gcd;
    }
    if acc.is_negative() {
        acc = -acc;
        for x in v.iter_mut() {
            *x = -x.clone();
        }
    }
    (acc, v)
}

/// Integer vectors in the kernel of the row `G`, from pairs of coordinates, plus pairwise sums.
fn kernel_directions(g: &[BigInt]) -> Vec<Vec<BigInt>> {
    let d = g.len();
    let Some(i0) = (0..d).filter(|&i| !g[i].is_zero()).min_by_key(|&i| g[i].abs()) else {
        return Vec::new();
    };
    let mut basis = Vec::new();
    for j in (0..d).filter(|&j| j != i0) {
        let h = g[i0].gcd(&g[j]);
        let mut w = vec![BigInt::zero(); d];
        w[i0] = &g[j] / &h;
        w[j] = -(&g[i0] / &h);
        basis.push(w);
    }
    let mut out = basis.clone();
    for a in 0..basis.len() {
        for b in a + 1..basis.len() {
            out.push(basis[a].iter().zip(&basis[b]).map(|(x, y)| x + y).collect());
        }
    }
    out
}

fn quad_form(a: &[Vec<i64>], u: &[BigInt], v: &[BigInt]) -> BigInt {
    let mut s = BigInt::zero();
    for (i, ui) in u.iter().enumerate() {
        if ui.is_zero() {
            continue;
        }
        let mut row = BigInt::zero();
        for (j, vj) in v.iter().enumerate() {
            if a[i][j] != 0 {
                row += vj * a[i][j];
            }
        }
        s += ui * row;
    }
    s
}

/// Least-denominator point on a chord from `r` within `½·q^(−c)`, searched over directions
/// `v = v_k + j·w` with `G·v = k·gcd(G)` fixed and `w` in the kernel of `G`.
fn next_point(z: &QuadraticHypersurface, r: &RationalPoint, opts: &LiouvilleOptions) -> Option<RationalPoint> {
    let p = r.numerators();
    let q = r.denominator();
    let a = z.quadratic();
    let grad = z.gradient_numerators(p, q);
    let (g, v0) = bezout(&grad);
    if g.is_zero() {
        return None;
    }
    let dirs = kernel_directions(&grad);
    let c = &opts.c_target;
    let two = int(2);
    let mut best: Option<RationalPoint> = None;

    for k in 1..=opts.k_max {
        let kg = &g * k;
        let vk: Vec<BigInt> = v0.iter().map(|x| x * k).collect();
        let nk = quad_form(a, &vk, &vk);
        for w in &dirs {
            let nw = quad_form(a, w, w);
            if nw.is_zero() {
                continue;
            }
            let bw = quad_form(a, &vk, w);
            let at = |j: &BigInt| -> (Vec<BigInt>, BigInt) {
                let v: Vec<BigInt> = vk.iter().zip(w).map(|(x, y)| x + j * y).collect();
                let n = &nk + &bw * j * 2 + &nw * j * j;
                (v, n)
            };
            // |x − r|∞ = |k·g|·|v|∞ / (q·|N|)
            let admissible = |j: &BigInt| -> bool {
                let (v, n) = at(j);
                if n.is_zero() {
                    return false;
                }
                let vmax = v.iter().map(|x| x.abs()).max().unwrap_or_default();
                let err = Rational::new(&kg * vmax, q * n.abs());
                le_inverse_power(&(&err * &two), q, c)
            };
            for sign in [1i64, -1] {
                let s = BigInt::from(sign);
                let mut hi = BigInt::one();
                let mut bits = 0;
                while !admissible(&(&hi * &s)) {
                    hi <<= 1;
                    bits += 1;
                    if bits > opts.max_bits {
                        break;
                    }
                }
                if bits > opts.max_bits {
                    continue;
                }
                let mut lo = &hi >> 1;
                // smallest admissible magnitude in (lo, hi], assuming monotonicity near the threshold
                while &hi - &lo > BigInt::one() {
                    let mid: BigInt = (&lo + &hi) >> 1;
                    if admissible(&(&mid * &s)) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                for t in 0..=opts.window {
                    let j = (&hi + t) * &s;
                    if !admissible(&j) {
                        continue;
                    }
                    let (v, n) = at(&j);
                    let nums: Vec<BigInt> = p.iter().zip(&v).map(|(pi, vi)| &n * pi - &kg * vi).collect();
                    let Ok(x) = RationalPoint::new(nums, q * &n) else { continue };
                    if x.denominator() <= q || !z.is_regular_at(&x).unwrap_or(false) {
                        continue;
                    }
                    if best.as_ref().is_none_or(|b| x < *b) {
                        best = Some(x);
                    }
                }
            }
        }
    }
    best
}

/// Checks the chain exactly: every point on the regular locus, denominators strictly increasing,
/// `‖r_{n+1} − r_n‖∞ <= ½·q_n^(−c)` and `‖r_last − r_n‖∞ <= q_n^(−c)`.
pub fn verify_witness_chain(z: &QuadraticHypersurface, chain: &[RationalPoint], c: &Rational) -> Result<()> {
    let bad = |m: String| Err(Error::Diagnostic(m));
    let Some(last) = chain.last() else {
        return bad("empty witness chain".into());
    };
    for (n, r) in chain.iter().enumerate() {
        if !z.evaluate(r)?.is_zero() || !z.is_regular_at(r)? {
            return bad(format!("witness {n} is not a regular point of the quadric"));
        }
    }
    let two = int(2);
    for (n, w) in chain.windows(2).enumerate() {
        if w[1].denominator() <= w[0].denominator() {
            return bad(format!("denominators do not increase at step {n}"));
        }
        if !le_inverse_power(&(w[0].max_dist(&w[1]) * &two), w[0].denominator(), c) {
            return bad(format!("step {n} is longer than half of q^(-c)"));
        }
        if !le_inverse_power(&w[0].max_dist(last), w[0].denominator(), c) {
            return bad(format!("witness {n} is farther than q^(-c) from the limit"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn bezout_and_kernel() {
        let g: Vec<BigInt> = [6, 10, 15].iter().map(|&x| BigInt::from(x)).collect();
        let (h, v) = bezout(&g);
        assert_eq!(h, BigInt::from(1));
        let dot: BigInt = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert_eq!(dot, h);
        for w in kernel_directions(&g) {
            let dot: BigInt = g.iter().zip(&w).map(|(a, b)| a * b).sum();
            assert!(dot.is_zero());
        }
    }

    #[test]
    fn one_step_on_the_circle() {
        let z = QuadraticHypersurface::unit_sphere(2);
        let lp = liouville_point(&z, &LiouvilleOptions::new(int(2), 1, 7)).unwrap();
        assert_eq!(lp.witnesses.len(), 2);
        let (r0, r1) = (&lp.witnesses[0], &lp.witnesses[1]);
        assert!(le_inverse_power(&(r0.max_dist(r1) * int(2)), r0.denominator(), &int(2)));
    }

    #[test]
    fn rejects_small_exponent() {
        let z = QuadraticHypersurface::unit_sphere(2);
        assert!(matches!(liouville_point(&z, &LiouvilleOptions::new(int(1), 3, 0)), Err(Error::InvalidInput(_))));
        assert!(liouville_point(&z, &LiouvilleOptions::new(rat(3, 2), 2, 0)).is_ok());
    }
}
