//! Height-bounded enumeration of rational points on a quadric.
//!
//! Brute force loops over `q` and all but one coordinate, then solves the remaining
//! coordinate exactly from the integer quadratic. The chord backend sends every primitive
//! direction `v` through the base point `p0/q0`; the second intersection is
//! `(N·p0 − (g·v)·v) / (q0·N)` with `N = vᵀAv` and `g = 2A·p0 + q0·b`.

use std::collections::BTreeSet;
use std::io::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

use super::{QuadraticHypersurface, RationalBox, RationalPoint};
use crate::error::{check_dim, Error, Result};
use crate::exact::{floor_rational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    BruteForce,
    Chord,
}

#[derive(Clone, Debug)]
pub struct EnumerationOptions {
    pub q_max: u64,
    pub region: Option<RationalBox>,
    pub include_singular: bool,
    pub backend: Backend,
    /// Cap on the number of candidate tuples or directions examined.
    pub budget: Option<u64>,
}

impl EnumerationOptions {
    pub fn new(q_max: u64, backend: Backend) -> Self {
        EnumerationOptions { q_max, region: None, include_singular: false, backend, budget: None }
    }

    pub fn with_region(mut self, region: RationalBox) -> Self {
        self.region = Some(region);
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EnumerationStats {
    pub candidates: u64,
    pub points: u64,
    /// Direction height bound used by the chord backend.
    pub chord_height: Option<u64>,
}

pub fn enumerate_points(z: &QuadraticHypersurface, opts: &EnumerationOptions) -> Result<Vec<RationalPoint>> {
    enumerate_points_with_stats(z, opts).map(|(p, _)| p)
}

pub fn enumerate_points_with_stats(
    z: &QuadraticHypersurface,
    opts: &EnumerationOptions,
) -> Result<(Vec<RationalPoint>, EnumerationStats)> {
    if opts.q_max == 0 {
        return Err(Error::InvalidInput("Q_max must be positive".into()));
    }
    if opts.backend == Backend::Chord && z.base_point().is_none() {
        return Err(Error::NoBasePoint);
    }
    let Some(region) = search_region(z, opts.region.as_ref())? else {
        return Ok((Vec::new(), EnumerationStats::default()));
    };
    let ctx = Ctx::new(z, &region, opts)?;
    let mut stats = EnumerationStats::default();
    let set = match opts.backend {
        Backend::BruteForce => ctx.brute_force(&mut stats)?,
        Backend::Chord => ctx.chord(&mut stats)?,
    };
    stats.points = set.len() as u64;
    Ok((set.into_iter().collect(), stats))
}

/// Region actually searched: the caller's box, clipped to the quadric's own bounding box when one exists.
fn search_region(z: &QuadraticHypersurface, region: Option<&RationalBox>) -> Result<Option<RationalBox>> {
    let own = z.bounding_box();
    match (region, own) {
        (Some(r), Some(o)) => {
            check_dim(z.dim(), r.dim())?;
            r.intersect(&o)
        }
        (Some(r), None) => {
            check_dim(z.dim(), r.dim())?;
            Ok(Some(r.clone()))
        }
        (None, Some(o)) => Ok(Some(o)),
        (None, None) => Err(Error::UnboundedQuadric),
    }
}

/// `H = ⌊Q·(q0·R + |p0|∞)⌋` bounds the primitive direction from `p0/q0` to any point `p/q` with
/// `q <= Q` and `|p/q|∞ <= R`, since that direction divides `q0·p − q·p0`.
pub fn chord_height_bound(z: &QuadraticHypersurface, q_max: u64, region: &RationalBox) -> Result<u64> {
    let base = z.base_point().ok_or(Error::NoBasePoint)?;
    let p0 = base.numerators().iter().map(|p| p.abs()).max().unwrap_or_default();
    let h = Rational::from_integer(BigInt::from(q_max))
        * (Rational::from_integer(base.denominator().clone()) * region.max_abs() + Rational::from_integer(p0));
    floor_rational(&h).to_u64().ok_or(Error::Overflow)
}

const SQUARE_MOD_64: [bool; 64] = {
    let mut t = [false; 64];
    let mut i = 0;
    while i < 64 {
        t[(i * i) % 64] = true;
        i += 1;
    }
    t
};

/// `Some(√n)` when `n` is a perfect square.
fn exact_sqrt(n: i128) -> Option<i128> {
    if n < 0 || !SQUARE_MOD_64[(n & 63) as usize] {
        return None;
    }
    let mut s = (n as f64).sqrt() as i128;
    if n > 1 << 52 {
        for _ in 0..2 {
            if s > 0 {
                s = (s + n / s) / 2;
            }
        }
    }
    while s > 0 && s * s > n {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= n {
        s += 1;
    }
    (s * s == n).then_some(s)
}

fn to_i128(b: &BigInt) -> Result<i128> {
    b.to_i128().ok_or(Error::Overflow)
}

/// Machine-integer view of the problem; every magnitude is checked against `2^120` up front.
struct Ctx<'a> {
    z: &'a QuadraticHypersurface,
    d: usize,
    a: Vec<Vec<i128>>,
    b: Vec<i128>,
    c: i128,
    lo: Vec<(i128, i128)>,
    hi: Vec<(i128, i128)>,
    q_max: i128,
    include_singular: bool,
    budget: Option<u64>,
}

const MAGNITUDE_CAP: f64 = 1.329_228e36; // 2^120

impl<'a> Ctx<'a> {
    fn new(z: &'a QuadraticHypersurface, region: &RationalBox, opts: &EnumerationOptions) -> Result<Self> {
        let frac = |r: &Rational| -> Result<(i128, i128)> { Ok((to_i128(r.numer())?, to_i128(r.denom())?)) };
        Ok(Ctx {
            z,
            d: z.dim(),
            a: z.quadratic().iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect(),
            b: z.linear().iter().map(|&v| v as i128).collect(),
            c: z.constant() as i128,
            lo: region.lower().iter().map(frac).collect::<Result<_>>()?,
            hi: region.upper().iter().map(frac).collect::<Result<_>>()?,
            q_max: i128::try_from(opts.q_max).map_err(|_| Error::Overflow)?,
            include_singular: opts.include_singular,
            budget: opts.budget,
        })
    }

    fn height(&self) -> f64 {
        self.z.coefficient_height().max(1) as f64
    }

    fn in_region(&self, p: &[i128], q: i128) -> bool {
        (0..self.d).all(|i| {
            let (ln, ld) = self.lo[i];
            let (hn, hd) = self.hi[i];
            ln * q <= p[i] * ld && p[i] * hd <= hn * q
        })
    }

    fn regular(&self, p: &[i128], q: i128) -> bool {
        (0..self.d).any(|i| (0..self.d).map(|j| 2 * self.a[i][j] * p[j]).sum::<i128>() + q * self.b[i] != 0)
    }

    /// Accepts `p/q` after normalization, provided it passes the height, region and regularity filters.
    fn accept(&self, mut p: Vec<i128>, mut q: i128, out: &mut BTreeSet<RationalPoint>) -> Result<()> {
        let g = p.iter().fold(q, |g, x| g.gcd(x));
        if g == 0 {
            return Ok(());
        }
        let g = if q < 0 { -g } else { g };
        q /= g;
        for x in p.iter_mut() {
            *x /= g;
        }
        if q > self.q_max || !self.in_region(&p, q) {
            return Ok(());
        }
        debug_assert_eq!(self.z.homogeneous_i128(&p, q), Some(0));
        if !self.include_singular && !self.regular(&p, q) {
            return Ok(());
        }
        out.insert(RationalPoint::new(p.into_iter().map(BigInt::from).collect(), BigInt::from(q))?);
        Ok(())
    }

    fn range(&self, i: usize, q: i128) -> (i128, i128) {
        let (ln, ld) = self.lo[i];
        let (hn, hd) = self.hi[i];
        (Integer::div_ceil(&(ln * q), &ld), Integer::div_floor(&(hn * q), &hd))
    }

    fn check_budget(&self, estimate: f64, what: &str) -> Result<()> {
        match self.budget {
            Some(b) if estimate > b as f64 => Err(Error::BudgetExceeded(format!(
                "{what}: about {estimate:.3e} candidates exceed the budget of {b}"
            ))),
            _ => Ok(()),
        }
    }

    fn brute_force(&self, stats: &mut EnumerationStats) -> Result<BTreeSet<RationalPoint>> {
        let d = self.d;
        let q_max = self.q_max;
        let width = |i: usize| {
            let (ln, ld) = self.lo[i];
            let (hn, hd) = self.hi[i];
            hn as f64 / hd as f64 - ln as f64 / ld as f64
        };
        // solve for the widest coordinate with a nonzero square term
        let k = (0..d)
            .filter(|&i| self.a[i][i] != 0)
            .max_by(|&i, &j| width(i).total_cmp(&width(j)).then(j.cmp(&i)))
            .unwrap_or_else(|| (0..d).max_by(|&i, &j| width(i).total_cmp(&width(j)).then(j.cmp(&i))).unwrap());

        let m = (0..d)
            .map(|i| {
                let (ln, ld) = self.lo[i];
                let (hn, hd) = self.hi[i];
                (ln as f64 / ld as f64).abs().max((hn as f64 / hd as f64).abs())
            })
            .fold(1.0f64, f64::max)
            * q_max as f64
            + 1.0;
        let df = d as f64;
        if 16.0 * df * df * self.height().powi(2) * m * m >= MAGNITUDE_CAP {
            return Err(Error::Overflow);
        }
        let estimate: f64 = (1..=q_max.min(1 << 20))
            .map(|q| (0..d).filter(|&i| i != k).map(|i| width(i) * q as f64 + 1.0).product::<f64>())
            .sum::<f64>()
            * if q_max > 1 << 20 { (q_max as f64 / (1u64 << 20) as f64).powi(d as i32) } else { 1.0 };
        self.check_budget(estimate, "brute-force enumeration")?;

        let free: Vec<usize> = (0..d).filter(|&i| i != k).collect();
        let akk = self.a[k][k];
        let mut out = BTreeSet::new();
        let mut p = vec![0i128; d];
        for q in 1..=q_max {
            let ranges: Vec<(i128, i128)> = (0..d).map(|i| self.range(i, q)).collect();
            if ranges.iter().any(|(l, h)| l > h) {
                continue;
            }
            let (tk_lo, tk_hi) = ranges[k];
            for &i in &free {
                p[i] = ranges[i].0;
            }
            'odometer: loop {
                stats.candidates += 1;
                let mut lin = q * self.b[k];
                let mut con = self.c * q * q;
                for &i in &free {
                    lin += 2 * self.a[k][i] * p[i];
                    let mut row = 0;
                    for &j in &free {
                        row += self.a[i][j] * p[j];
                    }
                    con += p[i] * (row + q * self.b[i]);
                }
                // akk·t² + lin·t + con = 0
                if akk == 0 {
                    if lin != 0 {
                        if con % lin == 0 {
                            let t = -con / lin;
                            if tk_lo <= t && t <= tk_hi {
                                p[k] = t;
                                self.accept(p.clone(), q, &mut out)?;
                            }
                        }
                    } else if con == 0 {
                        for t in tk_lo..=tk_hi {
                            p[k] = t;
                            self.accept(p.clone(), q, &mut out)?;
                        }
                    }
                } else if let Some(s) = exact_sqrt(lin * lin - 4 * akk * con) {
                    for num in [-lin + s, -lin - s] {
                        if num % (2 * akk) == 0 {
                            let t = num / (2 * akk);
                            if tk_lo <= t && t <= tk_hi {
                                p[k] = t;
                                self.accept(p.clone(), q, &mut out)?;
                            }
                        }
                        if s == 0 {
                            break;
                        }
                    }
                }
                for &i in &free {
                    if p[i] < ranges[i].1 {
                        p[i] += 1;
                        continue 'odometer;
                    }
                    p[i] = ranges[i].0;
                }
                break;
            }
        }
        Ok(out)
    }

    fn chord(&self, stats: &mut EnumerationStats) -> Result<BTreeSet<RationalPoint>> {
        let d = self.d;
        let base = self.z.base_point().ok_or(Error::NoBasePoint)?;
        let p0: Vec<i128> = base.numerators().iter().map(to_i128).collect::<Result<_>>()?;
        let q0 = to_i128(base.denominator())?;
        let lower: Vec<Rational> = self.lo.iter().map(|&(n, d)| Rational::new(n.into(), d.into())).collect();
        let upper: Vec<Rational> = self.hi.iter().map(|&(n, d)| Rational::new(n.into(), d.into())).collect();
        let region = RationalBox::new(lower, upper)?;
        let h = chord_height_bound(self.z, self.q_max as u64, &region)?;
        stats.chord_height = Some(h);
        let h = h as i128;
        let g: Vec<i128> = (0..d).map(|i| (0..d).map(|j| 2 * self.a[i][j] * p0[j]).sum::<i128>() + q0 * self.b[i]).collect();

        let hf = h as f64 + 1.0;
        let p0max = p0.iter().map(|x| x.abs()).max().unwrap_or(0) as f64 + q0 as f64;
        let gmax = g.iter().map(|x| x.abs()).sum::<i128>() as f64 + 1.0;
        let nmax = (d * d) as f64 * self.height() * hf * hf;
        if (nmax * p0max + gmax * hf * hf) * (q0 as f64 + 1.0) * 4.0 >= MAGNITUDE_CAP {
            return Err(Error::Overflow);
        }
        self.check_budget((2.0 * hf).powi(d as i32) / 2.0, "chord enumeration")?;

        let mut out = BTreeSet::new();
        self.accept(p0.clone(), q0, &mut out)?;
        let mut v = vec![-h; d];
        loop {
            let canonical = v.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0);
            if canonical && v.iter().fold(0i128, |g, x| g.gcd(x)) == 1 {
                stats.candidates += 1;
                let n: i128 = (0..d).map(|i| v[i] * (0..d).map(|j| self.a[i][j] * v[j]).sum::<i128>()).sum();
                let gv: i128 = (0..d).map(|i| g[i] * v[i]).sum();
                if n != 0 && gv != 0 {
                    let p: Vec<i128> = (0..d).map(|i| n * p0[i] - gv * v[i]).collect();
                    self.accept(p, q0 * n, &mut out)?;
                } else if n == 0 && gv == 0 {
                    self.line_points(&p0, q0, &v, &mut out, stats)?;
                }
            }
            let mut i = 0;
            while i < d && v[i] == h {
                v[i] = -h;
                i += 1;
            }
            if i == d {
                break;
            }
            v[i] += 1;
        }
        Ok(out)
    }

    /// Points `p0/q0 + (j/m)·v` of a line contained in the quadric, with `m <= Q·q0`.
    fn line_points(
        &self,
        p0: &[i128],
        q0: i128,
        v: &[i128],
        out: &mut BTreeSet<RationalPoint>,
        stats: &mut EnumerationStats,
    ) -> Result<()> {
        let reach = (0..self.d)
            .map(|i| {
                let (ln, ld) = self.lo[i];
                let (hn, hd) = self.hi[i];
                (ln as f64 / ld as f64).abs().max((hn as f64 / hd as f64).abs())
            })
            .fold(0.0f64, f64::max)
            + p0.iter().map(|x| x.abs()).max().unwrap_or(0) as f64 / q0 as f64;
        let vmax = v.iter().map(|x| x.abs()).max().unwrap_or(1) as f64;
        let tmax = reach / vmax;
        let m_max = self.q_max * q0;
        self.check_budget((m_max as f64).powi(2) * tmax, "line enumeration")?;
        for m in 1..=m_max {
            let j_max = (m as f64 * tmax).ceil() as i128 + 1;
            for j in -j_max..=j_max {
                stats.candidates += 1;
                let p: Vec<i128> = (0..self.d).map(|i| m * p0[i] + j * q0 * v[i]).collect();
                self.accept(p, q0 * m, out)?;
            }
        }
        Ok(())
    }
}

/// Writes points as CSV with columns `p_1, …, p_d, q`.
pub fn write_points_csv<W: Write>(points: &[RationalPoint], d: usize, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=d).map(|i| format!("p_{i}")).collect();
    header.push("q".into());
    wr.write_record(&header).map_err(csv_err)?;
    for p in points {
        check_dim(d, p.dim())?;
        let mut row: Vec<String> = p.numerators().iter().map(|n| n.to_string()).collect();
        row.push(p.denominator().to_string());
        wr.write_record(&row).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("csv: {other:?}")),
    }
}
