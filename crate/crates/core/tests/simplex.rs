use proptest::prelude::*;
use quadlab::error::Error;
use quadlab::exact::{int, rat, Rational};
use quadlab::rational_geometry::{QuadraticHypersurface, RationalBox, RationalPoint};
use quadlab::simplex_verifier::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quadrant() -> RationalBox {
    RationalBox::new(vec![int(0), int(0)], vec![int(1), int(1)]).unwrap()
}

fn plane(r: i64) -> RationalBox {
    RationalBox::new(vec![int(-r), int(-r)], vec![int(r), int(r)]).unwrap()
}

fn circle_balls(centers: usize, seed: u64) -> Vec<RationalBall> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..centers {
        let t: f64 = rng.gen_range(0.05..std::f64::consts::PI - 0.05);
        let c = vec![dyadic(t.cos(), 40), dyadic(t.sin(), 40)];
        for n in 3..=10u32 {
            out.push(RationalBall::new(c.clone(), Rational::new(1.into(), num_bigint::BigInt::from(1u64 << n))).unwrap());
        }
    }
    out
}

#[test]
fn whole_circle_gives_pythagorean_witness() {
    let z = QuadraticHypersurface::unit_sphere(2);
    let ball = RationalBall::new(vec![int(0), int(0)], int(2)).unwrap();
    let cert = verify_simplex(&z, &quadrant(), &ball, &int(10), None).unwrap();
    assert!(!cert.valid);
    assert_eq!(cert.affine_rank, 2);
    let expected = vec![
        RationalPoint::from_i64(&[0, 1], 1).unwrap(),
        RationalPoint::from_i64(&[1, 0], 1).unwrap(),
        RationalPoint::from_i64(&[3, 4], 5).unwrap(),
    ];
    assert_eq!(cert.violation.as_deref(), Some(&expected[..]));
    assert_eq!(format_points(&expected)[2], vec!["3/5".to_string(), "4/5".to_string()]);
}

#[test]
fn small_ball_points_share_a_line() {
    let z = QuadraticHypersurface::unit_sphere(2);
    let ball = RationalBall::new(vec![rat(3, 5), rat(4, 5)], rat(1, 64)).unwrap();
    let cert = verify_simplex(&z, &plane(2), &ball, &rat(1, 2), None).unwrap();
    assert!(cert.valid && witness_holds(&cert));
    assert_eq!(cert.q_max, 32);
    assert!(cert.points.contains(&RationalPoint::from_i64(&[3, 4], 5).unwrap()));
}

#[test]
fn calibration_over_seeded_circle_balls() {
    let z = QuadraticHypersurface::unit_sphere(2);
    let balls = circle_balls(20, 3);
    let grid = vec![int(2), int(1), rat(1, 2), rat(1, 4)];
    let cal = calibrate_kappa(&z, &plane(2), &balls, &grid, None).unwrap();
    let kappa = cal.require().unwrap();
    assert!(grid.contains(&kappa));
    assert_eq!(cal.certificates.len(), balls.len());
    assert!(cal.certificates.iter().all(witness_holds));
}

#[test]
fn calibration_rejects_bad_input() {
    let z = QuadraticHypersurface::unit_sphere(2);
    let grid = vec![int(1)];
    assert!(matches!(calibrate_kappa(&z, &plane(2), &[], &grid, None), Err(Error::InvalidInput(_))));
    let balls = circle_balls(1, 0);
    let rising = vec![int(1), int(2)];
    assert!(calibrate_kappa(&z, &plane(2), &balls, &rising, None).is_err());
}

#[test]
fn huge_kappa_reports_violations() {
    let z = QuadraticHypersurface::unit_sphere(2);
    let ball = RationalBall::new(vec![rat(3, 5), rat(4, 5)], rat(1, 8)).unwrap();
    let cal = calibrate_kappa(&z, &plane(2), &[ball], &[int(1_000_000)], None).unwrap();
    assert!(cal.kappa.is_none());
    assert!(!cal.violations.is_empty());
    assert_eq!(cal.violations[0].witness.len(), 3);
    assert!(matches!(cal.require(), Err(Error::Diagnostic(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn validity_is_monotone_in_kappa(t in 0.1f64..3.0, n in 2u32..7, k in 1i64..40) {
        let z = QuadraticHypersurface::unit_sphere(2);
        let c = vec![dyadic(t.cos(), 30), dyadic(t.sin(), 30)];
        let ball = RationalBall::new(c, rat(1, 1 << n)).unwrap();
        let big = verify_simplex(&z, &plane(2), &ball, &rat(k, 4), None).unwrap();
        let small = verify_simplex(&z, &plane(2), &ball, &rat(k, 8), None).unwrap();
        prop_assert!(big.valid <= small.valid);
        prop_assert!(small.q_max <= big.q_max);
    }
}
