use num_traits::One;
use proptest::prelude::*;
use quadlab::exact::{rat, Rational};
use quadlab::fractal_measures::region::AxisBox;
use quadlab::fractal_measures::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Box-count slope from the attractor points of all words of length `n`, generated directly
/// from the translations.
fn box_count(translations: &[Vec<f64>], r: f64, n: u32, scales: &[f64]) -> f64 {
    let mut pts = vec![vec![0.0; translations[0].len()]];
    for level in 0..n {
        let s = r.powi(level as i32);
        pts = pts
            .iter()
            .flat_map(|p| translations.iter().map(move |t| p.iter().zip(t).map(|(a, b)| a + s * b).collect::<Vec<f64>>()))
            .collect();
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &e in scales {
        let mut cells: Vec<Vec<i64>> = pts.iter().map(|p| p.iter().map(|v| ((v + 0.1234) / e).floor() as i64).collect()).collect();
        cells.sort();
        cells.dedup();
        xs.push((1.0 / e).ln());
        ys.push((cells.len() as f64).ln());
    }
    quadlab::stats::line_fit(&xs, &ys).unwrap().slope
}

#[test]
fn box_count_oracle_agrees_with_closed_form() {
    let cantor = box_count(&[vec![0.0], vec![2.0 / 3.0]], 1.0 / 3.0, 12, &[3f64.powi(-4), 3f64.powi(-6), 3f64.powi(-8)]);
    assert!((cantor - 2f64.ln() / 3f64.ln()).abs() < 0.03, "{cantor}");
    let t: Vec<Vec<f64>> = [(0.0, 0.0), (0.75, 0.0), (0.0, 0.75), (0.75, 0.75)].iter().map(|&(a, b)| vec![a, b]).collect();
    let corner = box_count(&t, 0.25, 8, &[4f64.powi(-3), 4f64.powi(-5), 4f64.powi(-6)]);
    assert!((corner - 1.0).abs() < 0.03, "{corner}");
}

#[test]
fn ahlfors_exponents() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cases = [
        (SelfSimilarMeasure::middle_thirds(), 1.0 / 3.0, 8, 2f64.ln() / 3f64.ln(), 0.02),
        (SelfSimilarMeasure::four_corner(), 0.25, 6, 1.0, 0.02),
        (SelfSimilarMeasure::square_tiling(), 0.5, 5, 2.0, 0.1),
    ];
    for (mu, r, n, want, tol) in cases {
        // the tiling has a boundary, so start it well below the diameter
        let top = if want == 2.0 { 0.05 } else { mu.rho0() / 2.0 };
        let scales = commensurate_scales(top, r, n);
        let fit = fit_ahlfors_delta(&mu, 12, &scales, Depth::default(), &mut rng).unwrap();
        assert!((fit.delta - want).abs() < tol, "{} vs {want}", fit.delta);
        assert!((mu.delta_exact().unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn ahlfors_rejects_large_scales() {
    let mu = SelfSimilarMeasure::middle_thirds();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(fit_ahlfors_delta(&mu, 2, &[2.0], Depth::default(), &mut rng).is_err());
}

#[test]
fn decay_exponents() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let c = SelfSimilarMeasure::middle_thirds();
    let eps = commensurate_scales(1.0 / 3.0, 1.0 / 3.0, 6);
    let points = HyperplaneSampler { directions: 1, nearby: 8 };
    let fit = fit_decay_alpha(&c, &points, &eps, 6, &[1.0 / 9.0, 1.0 / 27.0], Depth::default(), &mut rng).unwrap();
    assert!((fit.alpha_hat - 2f64.ln() / 3f64.ln()).abs() < 0.05, "{}", fit.alpha_hat);

    let sq = SelfSimilarMeasure::square_tiling();
    let eps = commensurate_scales(0.25, 0.5, 6);
    let lines = HyperplaneSampler { directions: 6, nearby: 0 };
    let fit = fit_decay_alpha(&sq, &lines, &eps, 6, &[0.05], Depth::default(), &mut rng).unwrap();
    assert!((fit.alpha_hat - 1.0).abs() < 0.05, "{}", fit.alpha_hat);
    // closed-form area fraction of a central band of half-width ε in the unit disk
    let band = |e: f64| 2.0 / std::f64::consts::PI * (e * (1.0 - e * e).sqrt() + e.asin());
    for p in &fit.envelope {
        assert!(p.upper >= band(p.eps) * 0.97, "{} {}", p.eps, p.upper);
    }
}

#[test]
fn federer_constants() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let sq = SelfSimilarMeasure::square_tiling();
    // interior centers only: scales well below the distance to the boundary
    let centers = [[0.4, 0.5], [0.6, 0.45]];
    for x in centers {
        let a = sq.measure(&Ball::new(x.to_vec(), 0.05).unwrap(), Depth::default()).unwrap();
        let b = sq.measure(&Ball::new(x.to_vec(), 0.1).unwrap(), Depth::default()).unwrap();
        assert!((b.mid() / a.mid() - 4.0).abs() < 0.1);
    }
    let c = SelfSimilarMeasure::middle_thirds();
    let f = check_federer(&c, 8, &commensurate_scales(0.2, 1.0 / 3.0, 5), Depth::default(), &mut rng).unwrap();
    assert!((1.0..=4.0).contains(&f), "{f}");
}

#[test]
fn depth_n_cylinders_sum_to_one() {
    let w = SelfSimilarMeasure::weighted_cantor(rat(1, 3)).unwrap();
    for n in 0..=10u32 {
        let mut total = Rational::from_integer(0.into());
        for idx in 0..(1usize << n) {
            let word: Vec<usize> = (0..n).map(|b| idx >> b & 1).collect();
            total += w.cylinder_measure(&word).unwrap();
        }
        assert!(total.is_one(), "n = {n}");
    }
}

#[test]
fn pushforward_keeps_the_ahlfors_exponent() {
    let mu = SelfSimilarMeasure::centered_cantor();
    let chart = Chart::upper_circle(rat(7, 10)).unwrap();
    let nu = Pushforward::new(mu.clone(), chart).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let scales = commensurate_scales(mu.rho0() / 2.0, 1.0 / 3.0, 7);
    let a = fit_ahlfors_delta(&mu, 10, &scales, Depth::default(), &mut rng).unwrap().delta;
    let b = fit_ahlfors_delta(&nu, 10, &scales, Depth::default(), &mut rng).unwrap().delta;
    assert!((a - b).abs() < 0.05, "{a} {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn brackets_tighten_with_depth(cx in 0.0f64..1.0, cy in 0.0f64..1.0, r in 0.02f64..0.5) {
        let mu = SelfSimilarMeasure::cantor_square();
        let ball = Ball::new(vec![cx, cy], r).unwrap();
        let mut prev = MassInterval { lower: 0.0, upper: 1.0 };
        for n in 0..7 {
            let m = mu.measure(&ball, Depth::Fixed(n)).unwrap();
            prop_assert!(m.lower >= prev.lower && m.upper <= prev.upper);
            prop_assert!(m.lower <= m.upper);
            prev = m;
        }
    }

    #[test]
    fn nested_boxes_have_ordered_upper_bounds(a in 0.0f64..0.5, b in 0.5f64..1.0, s in 0.0f64..0.2, depth in 1usize..8) {
        let mu = SelfSimilarMeasure::middle_thirds();
        let inner = AxisBox { lower: vec![a + s], upper: vec![b - s] };
        let outer = AxisBox { lower: vec![a], upper: vec![b] };
        let mi = mu.measure(&inner, Depth::Fixed(depth)).unwrap();
        let mo = mu.measure(&outer, Depth::Fixed(depth)).unwrap();
        prop_assert!(mi.upper <= mo.upper);
    }
}
