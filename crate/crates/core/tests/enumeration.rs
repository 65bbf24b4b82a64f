use std::collections::BTreeSet;

use num_bigint::BigInt;
use quadlab::exact::int;
use quadlab::rational_geometry::enumerate::{enumerate_points_with_stats, write_points_csv};
use quadlab::rational_geometry::{enumerate_points, Backend, EnumerationOptions, QuadraticHypersurface, RationalBox, RationalPoint};

/// Every primitive tuple `(p, q)` with `q <= q_max` and `|p_i| <= bound·q`, tested by direct evaluation.
fn naive(z: &QuadraticHypersurface, q_max: i64, bound: i64) -> BTreeSet<RationalPoint> {
    let d = z.dim();
    let mut out = BTreeSet::new();
    for q in 1..=q_max {
        let r = bound * q;
        let mut p = vec![-r; d];
        loop {
            let pb: Vec<BigInt> = p.iter().map(|&x| BigInt::from(x)).collect();
            let qb = BigInt::from(q);
            if z.homogeneous_big(&pb, &qb) == BigInt::from(0) {
                let x = RationalPoint::new(pb, qb).unwrap();
                if x.denominator() == &BigInt::from(q) {
                    out.insert(x);
                }
            }
            let mut i = 0;
            while i < d && p[i] == r {
                p[i] = -r;
                i += 1;
            }
            if i == d {
                break;
            }
            p[i] += 1;
        }
    }
    out
}

fn both(z: &QuadraticHypersurface, q: u64, region: Option<RationalBox>) -> (Vec<RationalPoint>, Vec<RationalPoint>) {
    let mut a = EnumerationOptions::new(q, Backend::BruteForce);
    a.region = region.clone();
    let mut b = EnumerationOptions::new(q, Backend::Chord);
    b.region = region;
    (enumerate_points(z, &a).unwrap(), enumerate_points(z, &b).unwrap())
}

#[test]
fn brute_force_matches_naive_tuple_search() {
    let circle = QuadraticHypersurface::unit_sphere(2);
    let (bf, _) = both(&circle, 13, None);
    assert_eq!(bf.into_iter().collect::<BTreeSet<_>>(), naive(&circle, 13, 1));

    let sphere = QuadraticHypersurface::unit_sphere(3);
    let (bf, _) = both(&sphere, 7, None);
    assert_eq!(bf.into_iter().collect::<BTreeSet<_>>(), naive(&sphere, 7, 1));

    let pell = QuadraticHypersurface::pell(2);
    let region = RationalBox::cube(&[int(0), int(0)], &int(4)).unwrap();
    let (bf, _) = both(&pell, 6, Some(region));
    assert_eq!(bf.into_iter().collect::<BTreeSet<_>>(), naive(&pell, 6, 4));
}

#[test]
fn backends_agree_up_to_forty() {
    for z in [QuadraticHypersurface::unit_sphere(2), QuadraticHypersurface::unit_sphere(3)] {
        let (bf, ch) = both(&z, 40, None);
        assert_eq!(bf, ch);
    }
    let region = RationalBox::cube(&[int(0), int(0)], &int(20)).unwrap();
    let (bf, ch) = both(&QuadraticHypersurface::pell(2), 40, Some(region));
    assert_eq!(bf, ch);
}

#[test]
fn every_point_is_on_the_quadric_and_primitive() {
    let z = QuadraticHypersurface::new(vec![vec![2, 1], vec![1, 3]], vec![-1, 0], -6)
        .unwrap()
        .with_base_point(RationalPoint::from_i64(&[1, 1], 1).unwrap())
        .unwrap();
    let (bf, ch) = both(&z, 30, None);
    assert_eq!(bf, ch);
    assert!(!bf.is_empty());
    for p in &bf {
        assert_eq!(z.evaluate(p).unwrap(), int(0));
        let renorm = RationalPoint::new(p.numerators().to_vec(), p.denominator().clone()).unwrap();
        assert_eq!(&renorm, p);
    }
    let mut sorted = bf.clone();
    sorted.sort();
    assert_eq!(sorted, bf);
}

#[test]
fn chord_reports_its_height_bound() {
    let z = QuadraticHypersurface::unit_sphere(2);
    let region = RationalBox::cube(&[int(0), int(0)], &int(1)).unwrap();
    let (_, stats) =
        enumerate_points_with_stats(&z, &EnumerationOptions::new(10, Backend::Chord).with_region(region)).unwrap();
    // H = Q·(q0·R + |p0|) = 10·(1 + 1)
    assert_eq!(stats.chord_height, Some(20));
}

#[test]
fn circle_csv_has_twelve_rows() {
    let z = QuadraticHypersurface::unit_sphere(2);
    let pts = enumerate_points(&z, &EnumerationOptions::new(5, Backend::BruteForce)).unwrap();
    let mut buf = Vec::new();
    write_points_csv(&pts, 2, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 13);
}
