use quadlab::exact::{int, rat, Rational};
use quadlab::fractal_measures::region::RealQuadric;
use quadlab::fractal_measures::*;
use quadlab::neighborhood_decay::*;
use quadlab::rational_geometry::RationalBox;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CANTOR_DIM: f64 = 0.630_929_753_571_457_4;

fn circle(b: Rational) -> RealQuadric {
    RealQuadric::new(vec![vec![int(1), int(0)], vec![int(0), int(1)]], vec![int(0), int(0)], -b).unwrap()
}

fn near(samples: usize, radii: Vec<f64>, seed: u64) -> BallPlan {
    BallPlan::NearObstacle { samples, radii, tries: 400, seed }
}

#[test]
fn horizontal_segment_sees_one_cantor_factor() {
    let mu = SelfSimilarMeasure::cantor_square();
    let line = GraphPatch::constant(rat(2, 9), 0.0, 1.0).unwrap();
    let exp = DecayExperiment {
        measure: &mu,
        balls: BallPlan::Fixed(vec![(vec![0.0, 2.0 / 9.0], 1.0 / 9.0), (vec![2.0 / 3.0, 2.0 / 9.0], 1.0 / 9.0)]),
        eps: commensurate_scales(1.0, 1.0 / 3.0, 6),
        depth: Depth::default(),
    };
    let r = run_graph_decay(&exp, &line, 0.5).unwrap();
    assert!((r.alpha_hat - CANTOR_DIM).abs() < 0.1, "{}", r.alpha_hat);
    assert!(r.monotone_in_eps());
}

#[test]
fn parabola_against_area() {
    let mu = SelfSimilarMeasure::square_tiling();
    let p = GraphPatch::parabola(0.0, 1.0, 0.5).unwrap();
    assert!((p.hessian_norm() - 2.0).abs() < 1e-12);
    let balls: Vec<(Vec<f64>, f64)> = [0.3, 0.5, 0.7].iter().map(|&x| (vec![x, x * x], 0.05)).collect();
    let exp = DecayExperiment {
        measure: &mu,
        balls: BallPlan::Fixed(balls),
        eps: commensurate_scales(0.5, 0.5, 5),
        depth: Depth::default(),
    };
    let r = run_graph_decay(&exp, &p, 0.9).unwrap();
    assert!((r.alpha_hat - 1.0).abs() < 0.1, "{}", r.alpha_hat);
    let far = DecayExperiment { balls: BallPlan::Fixed(vec![(vec![0.5, 0.25], 0.3)]), ..exp };
    assert!(run_graph_decay(&far, &p, 0.9).is_err());
}

#[test]
fn circle_family_constants_are_uniform() {
    let mu = SelfSimilarMeasure::cantor_square();
    let exp = DecayExperiment {
        measure: &mu,
        balls: near(4, vec![0.25], 21),
        eps: commensurate_scales(1.0, 0.5, 6),
        depth: Depth::default(),
    };
    let family: Vec<(String, RealQuadric)> =
        [rat(1, 4), rat(1, 2), int(1), int(2)].into_iter().map(|b| (format!("b={b}"), circle(b))).collect();
    let t = run_quadric_decay(&exp, &family, 0.9 * CANTOR_DIM * 0.9).unwrap();
    for row in &t.rows {
        assert!(row.constant > 0.0, "{}", row.label);
    }
    assert!(t.uniform_within(8.0), "{:?}", t.rows);
}

#[test]
fn disjoint_quadric_has_zero_ratio() {
    let mu = SelfSimilarMeasure::cantor_square();
    let exp = DecayExperiment {
        measure: &mu,
        balls: BallPlan::Fixed(vec![(vec![0.0, 0.0], 1.0 / 9.0)]),
        eps: vec![1.0, 0.5],
        depth: Depth::default(),
    };
    let r = exp.run("far", &Obstacle::Quadric(circle(int(16))), 0.5).unwrap();
    assert_eq!(r.max_ratio, 0.0);
}

#[test]
fn line_pair_decays_like_one_line() {
    // (y − 2/9)(y − 2/3) = 0 reduces to two slabs
    let mu = SelfSimilarMeasure::cantor_square();
    let pair = RealQuadric::new(vec![vec![int(0), int(0)], vec![int(0), int(1)]], vec![int(0), rat(-8, 9)], rat(4, 27)).unwrap();
    let exp = DecayExperiment {
        measure: &mu,
        balls: BallPlan::Fixed(vec![(vec![0.0, 2.0 / 9.0], 1.0 / 9.0), (vec![2.0 / 3.0, 2.0 / 3.0], 1.0 / 9.0)]),
        eps: commensurate_scales(1.0, 1.0 / 3.0, 6),
        depth: Depth::default(),
    };
    let r = exp.run("pair", &Obstacle::Quadric(pair), 0.5).unwrap();
    assert!((r.alpha_hat - CANTOR_DIM).abs() < 0.1, "{}", r.alpha_hat);
}

/// A little larger than the attractor box `[0, 1]²`, which is enclosed with outward rounding.
fn unit_square() -> RationalBox {
    RationalBox::new(vec![rat(-1, 16), rat(-1, 16)], vec![rat(17, 16), rat(17, 16)]).unwrap()
}

fn source_profile() -> DecayProfile {
    DecayProfile::new(CANTOR_DIM, 2.0 * CANTOR_DIM, 9.0, None, 2).unwrap()
}

#[test]
fn identity_pushforward_is_bit_exact() {
    let mu = SelfSimilarMeasure::cantor_square();
    let sampler = HyperplaneSampler { directions: 3, nearby: 2 };
    let eps = commensurate_scales(1.0, 1.0 / 3.0, 4);
    let pushed =
        run_pushforward_decay(&IdentityMap(2), &mu, &source_profile(), &sampler, &eps, 3, &[1.0 / 9.0], Depth::default(), 5)
            .unwrap();
    let direct =
        fit_decay_alpha(&mu, &sampler, &eps, 3, &[1.0 / 9.0], Depth::default(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert_eq!(pushed.alpha_hat.to_bits(), direct.alpha_hat.to_bits());
    assert_eq!(pushed.rho_cap, f64::INFINITY);
}

#[test]
fn affine_pushforward_keeps_exponent() {
    let mu = SelfSimilarMeasure::cantor_square();
    let m = vec![vec![int(0), int(1)], vec![int(2), int(0)]];
    let phi = QuadraticMap::affine(m, vec![int(1), int(0)], unit_square()).unwrap();
    let sampler = HyperplaneSampler { directions: 1, nearby: 6 };
    let eps = commensurate_scales(1.0 / 3.0, 1.0 / 3.0, 5);
    let direct = fit_decay_alpha(&mu, &sampler, &eps, 4, &[1.0 / 9.0], Depth::default(), &mut ChaCha8Rng::seed_from_u64(8))
        .unwrap();
    let pushed =
        run_pushforward_decay(&phi, &mu, &source_profile(), &sampler, &eps, 4, &[2.0 / 9.0], Depth::default(), 8).unwrap();
    assert!((pushed.alpha_hat - direct.alpha_hat).abs() < 0.05, "{} {}", pushed.alpha_hat, direct.alpha_hat);
}

#[test]
fn shear_pushforward_meets_relaxed_exponent() {
    let mu = SelfSimilarMeasure::cantor_square();
    let phi = QuadraticMap::shear_parabola(unit_square()).unwrap();
    let cap = phi.rho_cap();
    let sampler = HyperplaneSampler { directions: 1, nearby: 6 };
    let eps = commensurate_scales(1.0 / 3.0, 1.0 / 3.0, 5);
    let res = run_pushforward_decay(&phi, &mu, &source_profile(), &sampler, &eps, 4, &[cap, cap / 3.0], Depth::default(), 9)
        .unwrap();
    assert!(res.meets_relaxed, "{} vs beta {}", res.alpha_hat, res.source_beta);
    let too_big = run_pushforward_decay(&phi, &mu, &source_profile(), &sampler, &eps, 4, &[cap * 1.5], Depth::default(), 9);
    assert!(too_big.is_err());
}

#[test]
fn vertical_slices_of_the_circle() {
    let chart = Chart::upper_circle(rat(4, 5)).unwrap();
    let nu = Pushforward::new(SelfSimilarMeasure::centered_cantor(), chart).unwrap();
    // x = 3/5 passes through the support endpoint u = 3/5
    let planes = vec![(vec![int(1), int(0)], rat(3, 5))];
    let plan = BallPlan::Fixed(vec![(vec![0.6], 0.2)]);
    let eps = commensurate_scales(1.0, 1.0 / 3.0, 5);
    let r = run_chart_slice_decay(&nu, &planes, &plan, &eps, Depth::default(), 0.5).unwrap();
    assert!((r[0].report.alpha_hat - CANTOR_DIM).abs() < 0.1, "{}", r[0].report.alpha_hat);

    // the tangent line y = 1 touches the circle at u = 0, away from the support
    let tangent = vec![(vec![int(0), int(1)], int(1))];
    let plan = BallPlan::Fixed(vec![(vec![0.6], 0.05)]);
    let r = run_chart_slice_decay(&nu, &tangent, &plan, &[0.5, 0.25], Depth::default(), 0.5).unwrap();
    assert_eq!(r[0].report.max_ratio, 0.0);
}

#[test]
fn pulled_back_plane_matches_substitution() {
    let chart = Chart::upper_hemisphere(rat(1, 2)).unwrap();
    // z = 9/10 on the sphere is u² + v² = 19/100
    let o = pull_back_slice(&chart, &[int(0), int(0), int(1)], &rat(9, 10)).unwrap();
    let Obstacle::Quadric(q) = o else { panic!("expected a quadric") };
    assert!((q.eval_f64(&[0.3, 0.3]) + 0.01).abs() < 1e-12);
    let root = (0.19f64).sqrt();
    assert!(q.eval_f64(&[root, 0.0]).abs() < 1e-12);
    let flat = pull_back_slice(&chart, &[int(1), int(1), int(0)], &rat(1, 5)).unwrap();
    assert!(matches!(flat, Obstacle::Hyperplane { .. }));
}
