//! Exact Gaussian elimination over the rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{AffineHyperplane, RationalPoint};
use crate::exact::{lcm_all, Rational};

/// Reduced row echelon form in place; returns the pivot columns.
pub fn row_reduce(m: &mut [Vec<Rational>]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(mut m: Vec<Vec<Rational>>) -> usize {
    row_reduce(&mut m).len()
}

pub fn determinant(mut m: Vec<Vec<Rational>>) -> Rational {
    let n = m.len();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= &m[c][c];
        for i in c + 1..n {
            if !m[i][c].is_zero() {
                let f = &m[i][c] / &m[c][c];
                for j in c..n {
                    let t = &f * &m[c][j];
                    m[i][j] -= t;
                }
            }
        }
    }
    det
}

/// A nonzero vector `v` with `M v = 0`, if the kernel is nontrivial.
pub fn kernel_vector(mut m: Vec<Vec<Rational>>, cols: usize) -> Option<Vec<Rational>> {
    let pivots = row_reduce(&mut m);
    let free = (0..cols).find(|c| !pivots.contains(c))?;
    let mut v = vec![Rational::zero(); cols];
    v[free] = Rational::one();
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -m[row][free].clone();
    }
    Some(v)
}

fn differences(points: &[RationalPoint]) -> Vec<Vec<Rational>> {
    let base = points[0].coords();
    points[1..]
        .iter()
        .map(|p| p.coords().iter().zip(&base).map(|(a, b)| a - b).collect())
        .collect()
}

/// Dimension of the affine span of the points.
pub fn affine_rank(points: &[RationalPoint]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    rank(differences(points))
}

/// A hyperplane containing every point, or `None` when the points affinely span `R^d`.
///
/// The normal is scaled to a primitive integer vector with its first nonzero entry positive.
pub fn fit_hyperplane(points: &[RationalPoint]) -> Option<AffineHyperplane> {
    let first = points.first()?;
    let d = first.dim();
    let normal = if points.len() == 1 {
        let mut e = vec![Rational::zero(); d];
        e[0] = Rational::one();
        e
    } else {
        kernel_vector(differences(points), d)?
    };
    let normal = primitive_integer(&normal);
    let offset: Rational = normal.iter().zip(first.coords()).map(|(n, x)| n * x).sum();
    AffineHyperplane::new(normal, offset).ok()
}

/// Rescales a nonzero rational vector to a primitive integer vector whose first nonzero entry is positive.
pub fn primitive_integer(v: &[Rational]) -> Vec<Rational> {
    let l = lcm_all(v.iter().map(|x| x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&l / x.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    let sign = ints.iter().find(|x| !x.is_zero()).map_or(BigInt::one(), |x| x.signum());
    ints.into_iter().map(|x| Rational::from_integer(x / &g * &sign)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use proptest::prelude::*;

    fn pt(p: &[i64], q: i64) -> RationalPoint {
        RationalPoint::from_i64(p, q).unwrap()
    }

    #[test]
    fn two_points_span_a_line() {
        let pts = [pt(&[1, 0], 1), pt(&[0, 1], 1)];
        assert_eq!(affine_rank(&pts), 1);
        let h = fit_hyperplane(&pts).unwrap();
        assert_eq!(h.normal(), &[int(1), int(1)]);
        assert_eq!(h.offset(), &int(1));
    }

    #[test]
    fn three_circle_points_are_full_rank() {
        let pts = [pt(&[1, 0], 1), pt(&[0, 1], 1), pt(&[3, 4], 5)];
        assert_eq!(affine_rank(&pts), 2);
        assert!(fit_hyperplane(&pts).is_none());
    }

    #[test]
    fn single_point() {
        let p = pt(&[3, 4], 5);
        assert_eq!(affine_rank(std::slice::from_ref(&p)), 0);
        assert!(fit_hyperplane(std::slice::from_ref(&p)).unwrap().contains(&p));
    }

    #[test]
    fn determinants() {
        let m = vec![vec![int(2), int(1)], vec![int(1), int(3)]];
        assert_eq!(determinant(m), int(5));
        let m = vec![vec![rat(1, 2), int(1)], vec![int(1), int(2)]];
        assert_eq!(determinant(m), int(0));
    }

    fn small_points() -> impl Strategy<Value = Vec<RationalPoint>> {
        prop::collection::vec((prop::collection::vec(-6i64..6, 3), 1i64..5), 1..6)
            .prop_map(|v| v.into_iter().map(|(p, q)| pt(&p, q)).collect())
    }

    proptest! {
        #[test]
        fn rank_is_permutation_invariant(mut pts in small_points(), seed in 0usize..100) {
            let r = affine_rank(&pts);
            let n = pts.len();
            pts.rotate_left(seed % n);
            pts.reverse();
            prop_assert_eq!(r, affine_rank(&pts));
        }

        #[test]
        fn adding_a_point_in_the_span_keeps_rank(pts in small_points(), a in -3i64..3, b in -3i64..3) {
            prop_assume!(pts.len() >= 2);
            let r = affine_rank(&pts);
            // affine combination (1 - a - b) p0 + a p1 + b p_last
            let c0 = pts[0].coords();
            let c1 = pts[1].coords();
            let c2 = pts[pts.len() - 1].coords();
            let w0 = int(1 - a - b);
            let comb: Vec<Rational> = (0..3).map(|i| &w0 * &c0[i] + int(a) * &c1[i] + int(b) * &c2[i]).collect();
            let mut more = pts.clone();
            more.push(RationalPoint::from_rationals(&comb).unwrap());
            prop_assert_eq!(r, affine_rank(&more));
        }

        #[test]
        fn fitted_hyperplane_contains_all(pts in small_points()) {
            if let Some(h) = fit_hyperplane(&pts) {
                prop_assert!(affine_rank(&pts) <= 2);
                for p in &pts {
                    prop_assert!(h.contains(p));
                }
            } else {
                prop_assert_eq!(affine_rank(&pts), 3);
            }
        }
    }
}
