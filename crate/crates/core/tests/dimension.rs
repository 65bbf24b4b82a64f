use quadlab::dimension_estimator::*;
use quadlab::error::Error;
use quadlab::exact::{int, rat};
use quadlab::fractal_measures::*;
use quadlab::rational_geometry::QuadraticHypersurface;

const CANTOR_DIM: f64 = 0.630_929_753_571_457_4;

fn circle_measure() -> Pushforward<Chart> {
    Pushforward::new(SelfSimilarMeasure::centered_cantor(), Chart::upper_circle(rat(4, 5)).unwrap()).unwrap()
}

fn exponents() -> Exponents {
    Exponents { delta: CANTOR_DIM, alpha: CANTOR_DIM, beta: 0.9 * CANTOR_DIM }
}

fn levels(c: f64, ns: std::ops::RangeInclusive<u32>) -> Vec<CoverLevel> {
    let nu = circle_measure();
    let z = QuadraticHypersurface::unit_sphere(2);
    let k = support_box(&nu, 0.125).unwrap();
    build_cover(&nu, &z, &k, &CoverConfig::new(c, int(2), ns.collect())).unwrap()
}

#[test]
fn cover_centers_are_separated_and_maximal() {
    for level in levels(2.0, 3..=7) {
        assert!(level.separated(), "level {}", level.n);
        assert!(level.maximal(), "level {}", level.n);
        assert!(level.multiplicity() <= 16, "level {} multiplicity {}", level.n, level.multiplicity());
        assert!(level.live_centers() > 0);
        assert!((level.slab_radius - level.rho.powf(2.0)).abs() < 1e-15);
    }
}

#[test]
fn cost_decreases_in_s() {
    let ls = levels(1.5, 3..=10);
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let report = transition_exponent(&ls, exponents(), &grid, Summability::default()).unwrap();
    for w in report.rows.windows(2) {
        assert!(w[1].cumulative <= w[0].cumulative);
        assert!(w[1].per_level.iter().zip(&w[0].per_level).all(|(a, b)| a <= b));
    }
    let s = report.require().unwrap();
    assert!(s <= report.bound_beta + 0.1, "{s} vs {}", report.bound_beta);
}

#[test]
fn single_level_costs() {
    let ls = levels(1.0, 4..=4);
    let l = &ls[0];
    assert_eq!(l.cost(0.0), l.ball_count() as f64);
    let row = cost_sum(&ls, 0.5, Summability::default()).unwrap();
    assert!(row.ratios.is_empty());
    assert!(!row.summable);
    assert_eq!(row.cumulative, l.cost(0.5));
    assert!(cost_sum(&[], 0.5, Summability::default()).is_err());
    assert!(transition_exponent(&ls, exponents(), &[0.5], Summability::default()).is_err());
}

#[test]
fn chain_forms_are_comparable() {
    let nu = circle_measure();
    let constants = ChainConstants { ahlfors_lower: 0.2, multiplicity: 4.0, decay: 2.0 };
    for level in levels(2.0, 4..=7) {
        let links = chain_links(&nu, &level, CANTOR_DIM, exponents(), Depth::default()).unwrap();
        assert!(links.counted > 0.0 && links.decay > 0.0);
        assert_eq!(links.holds(CANTOR_DIM, &constants), [true; 3], "{links:?}");
    }
}

#[test]
fn c_one_collapses_to_delta() {
    let ls = levels(1.0, 3..=10);
    let grid: Vec<f64> = (40..=90).map(|i| i as f64 / 100.0).collect();
    let report = transition_exponent(&ls, exponents(), &grid, Summability::default()).unwrap();
    assert!((report.bound_beta - CANTOR_DIM).abs() < 1e-12);
    let s = report.require().unwrap();
    assert!((s - CANTOR_DIM).abs() <= 0.05, "{s}");
}

#[test]
fn cylinder_unions_keep_box_dimension() {
    let nu = circle_measure();
    let unions: Vec<Vec<Vec<usize>>> =
        vec![vec![vec![]], vec![vec![0, 1, 1]], vec![vec![0, 0], vec![1, 1, 0]], vec![vec![1], vec![0, 1, 0, 1]]];
    for words in unions {
        let m = mdp_lower_check(&nu, &words, CANTOR_DIM, 0.05, 8).unwrap();
        assert!(m.passes, "{words:?}: {}", m.box_dimension);
        assert!(m.counts.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn zero_mass_union_is_rejected() {
    let nu = circle_measure();
    assert!(matches!(mdp_lower_check(&nu, &[], CANTOR_DIM, 0.05, 8), Err(Error::InvalidInput(_))));
}

#[test]
fn height_cap_is_kappa_over_twice_rho() {
    assert_eq!(height_cap(&int(2), 3), 8.0);
    assert_eq!(height_cap(&rat(1, 2), 0), 0.25);
}
