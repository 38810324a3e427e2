//! Knock-in grid checks that go through the public API only.

use scenario_arb::fixtures::{grid_index, knock_in_grid, GRID_STEPS};
use scenario_arb::lp::zero_convex_combination;
use scenario_arb::measures::{efficient_set_oracle, max_weight_measure};
use scenario_arb::partition::run_partition_scheme;
use scenario_arb::rational::{int, rat};
use scenario_arb::Rational;

#[test]
fn grid_shape() {
    let m = knock_in_grid(rat(3, 2));
    assert_eq!(m.num_scenarios(), 289);
    assert_eq!(m.num_options(), 2);
    assert_eq!(m.natural_filtration().atoms(1).len(), 17);
    assert_eq!(m.natural_filtration().atoms(2).len(), 289);
}

#[test]
fn grid_increment_pairs_with_a_down_move() {
    let m = knock_in_grid(rat(3, 2));
    // One representative per value of S1.
    let reps: Vec<usize> = (0..=GRID_STEPS).map(|i| grid_index(i, 0)).collect();
    let points: Vec<Vec<Rational>> = reps.iter().map(|&w| m.delta_s(w, 1)).collect();
    let target = 14;
    assert_eq!(m.price(reps[target], 1)[0], rat(7, 2));
    let lambda = zero_convex_combination(&points, target).unwrap();
    assert!(lambda[target].is_positive());
    assert!(lambda.iter().all(|l| !l.is_negative()));
    assert_eq!(lambda.iter().fold(Rational::zero(), |a, b| a + b), int(1));
    let mean = points
        .iter()
        .zip(&lambda)
        .fold(Rational::zero(), |acc, (y, l)| acc + l * &y[0]);
    assert!(mean.is_zero());
    assert!((0..target).any(|i| lambda[i].is_positive() && m.price(reps[i], 1)[0] < int(2)));
}

#[test]
fn scheme_rounds_on_the_grid() {
    let m = knock_in_grid(rat(3, 2));
    let r = run_partition_scheme(&m).unwrap();
    assert!(r.success);
    assert_eq!(r.beta, 2);
    // S1 ∈ {0, 4} are absorbing for a martingale, so the first aggregator
    // removes every path leaving them.
    let boundary_leaks = (1..=GRID_STEPS)
        .map(|j| grid_index(0, j))
        .chain((0..GRID_STEPS).map(|j| grid_index(GRID_STEPS, j)));
    for w in boundary_leaks {
        assert!(!r.a_star[0].contains(&w));
    }
    for s in &r.a_star[2] {
        let x1 = &m.price(*s, 1)[0];
        assert!(x1 > &rat(3, 2));
    }
}

#[test]
fn knocked_out_grid_has_no_calibrated_measure() {
    let m = knock_in_grid(int(4));
    assert!(efficient_set_oracle(&m).unwrap().is_empty());
    assert!(max_weight_measure(&m, grid_index(8, 8)).unwrap().is_none());
    assert!(!run_partition_scheme(&m).unwrap().success);
}
