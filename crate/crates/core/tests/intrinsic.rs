use std::time::Instant;

use num_bigint::BigInt;
use quadlab::exact::{int, le_inverse_power, rat};
use quadlab::intrinsic_approx::{
    best_approximations, best_approximations_in, circle_targets, dirichlet_constant, estimate_omega_in,
    liouville_point, min_product_up_to, running_min_products, verify_witness_chain, ApproximantSet,
    LiouvilleOptions, DEFAULT_TOLERANCE,
};
use quadlab::rational_geometry::{QuadraticHypersurface, RationalBox};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn upper_half() -> RationalBox {
    RationalBox::new(vec![int(-1), int(0)], vec![int(1), int(1)]).unwrap()
}

/// Successive minima recomputed by a plain scan of every point with exact rational errors.
fn naive_records(set: &ApproximantSet, x: &[f64]) -> Vec<BigInt> {
    let xr: Vec<_> = x.iter().map(|&v| quadlab::exact::rational_from_f64(v).unwrap()).collect();
    let mut best: Option<quadlab::exact::Rational> = None;
    let mut out = Vec::new();
    for p in set.points() {
        let e = xr.iter().zip(p.coords()).map(|(a, b)| num_traits::Signed::abs(&(a - b))).max().unwrap();
        if best.as_ref().is_none_or(|b| &e < b) {
            if out.last() != Some(p.denominator()) {
                out.push(p.denominator().clone());
            }
            best = Some(e);
        }
    }
    out
}

#[test]
fn records_match_a_naive_scan() {
    let z = QuadraticHypersurface::unit_sphere(2);
    let set = ApproximantSet::enumerate(&z, 300, Some(upper_half())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for x in circle_targets(&mut rng, 10, 0.1, 3.0) {
        let recs = best_approximations_in(&set, &z, &x, DEFAULT_TOLERANCE).unwrap();
        let qs: Vec<BigInt> = recs.iter().map(|r| r.q.clone()).collect();
        assert_eq!(qs, naive_records(&set, &x));
    }
}

#[test]
fn dirichlet_products_on_the_circle() {
    let z = QuadraticHypersurface::unit_sphere(2);
    let x = [1f64.cos(), 1f64.sin()];
    let recs = best_approximations(&z, &x, 100).unwrap();
    assert!(dirichlet_constant(&recs).unwrap() <= 10.0);

    let t = Instant::now();
    let set = ApproximantSet::enumerate(&z, 10_000, Some(upper_half())).unwrap();
    eprintln!("enumerated {} points in {:?}", set.len(), t.elapsed());
    let recs = best_approximations_in(&set, &z, &x, DEFAULT_TOLERANCE).unwrap();
    let c = dirichlet_constant(&recs).unwrap();
    assert!(c <= 10.0);
    let run = running_min_products(&recs);
    assert!(run.windows(2).all(|w| w[1].1 <= w[0].1));
    assert!(min_product_up_to(&recs, 10_000).unwrap() <= min_product_up_to(&recs, 100).unwrap());

    let est = estimate_omega_in(&set, &z, &x, 5).unwrap();
    eprintln!("omega at (cos 1, sin 1): {:.3}, tail max {:.3}", est.omega_hat, est.omega_tail_max);
    assert!((0.8..=1.3).contains(&est.omega_hat));
}

#[test]
fn liouville_chain_has_the_target_exponent() {
    let z = QuadraticHypersurface::unit_sphere(2);
    let t = Instant::now();
    let lp = liouville_point(&z, &LiouvilleOptions::new(int(3), 4, 1)).unwrap();
    eprintln!("liouville depth 4 in {:?}, q bits {:?}", t.elapsed(), lp.witnesses.iter().map(|w| w.denominator().bits()).collect::<Vec<_>>());
    verify_witness_chain(&z, &lp.witnesses, &int(3)).unwrap();
    for w in lp.witnesses.windows(2) {
        assert!(w[0].denominator() < w[1].denominator());
    }
    for (n, r) in lp.witnesses.iter().enumerate().take(4) {
        assert!(le_inverse_power(&r.max_dist(lp.limit()), r.denominator(), &int(3)), "n = {n}");
    }
    let est = lp.omega_estimate(5).unwrap();
    eprintln!("liouville omega {}", est.omega_hat);
    assert!(est.omega_hat >= 2.7);

    let lp = liouville_point(&z, &LiouvilleOptions::new(rat(3, 2), 4, 2)).unwrap();
    assert!(lp.omega_estimate(5).unwrap().omega_hat >= 1.2);
    let sphere = QuadraticHypersurface::unit_sphere(3);
    let lp = liouville_point(&sphere, &LiouvilleOptions::new(int(2), 3, 5)).unwrap();
    verify_witness_chain(&sphere, &lp.witnesses, &int(2)).unwrap();
}
