//! Small reference markets.
//!
//! * `m1`: one step, `S0 = 2`, `S1 ∈ {3, 1}` (a fair coin).
//! * `m2`: one step, `S0 = 3`, `S1 ∈ {3, 1}` (the down move is an arbitrage).
//! * `m3`: one step, `S0 = 3`, `S1 ∈ {1, 2}` (every scenario is an arbitrage).
//! * `m4`: `m1` plus a call with strike 2 bought at a given cost.
//! * [`knock_in_grid`]: two periods on the grid `{0, 1/4, ..., 4}²` with two
//!   knock-in calls.

use crate::model::{MarketModel, OptionPayoff, Scenario};
use crate::rational::{int, rat, Rational};

fn one_step(s0: i64, ups: &[(&str, i64)]) -> MarketModel {
    let scenarios = ups
        .iter()
        .map(|(id, s1)| Scenario {
            id: (*id).to_string(),
            prices: vec![vec![int(s0)], vec![int(*s1)]],
            factors: vec![vec![], vec![]],
        })
        .collect();
    MarketModel::new(1, 1, 0, scenarios, None, vec![]).expect("fixture is valid")
}

pub fn m1() -> MarketModel {
    one_step(2, &[("u", 3), ("d", 1)])
}

pub fn m2() -> MarketModel {
    one_step(3, &[("u", 3), ("d", 1)])
}

pub fn m3() -> MarketModel {
    one_step(3, &[("s1", 1), ("s2", 2)])
}

/// `m1` with the option `(S1 - 2)⁺ - cost`.
pub fn m4(cost: Rational) -> MarketModel {
    let m = m1();
    let payoff = (0..m.num_scenarios())
        .map(|w| (&m.price(w, 1)[0] - int(2)).positive_part() - &cost)
        .collect();
    m.with_option_payoffs(vec![OptionPayoff {
        name: "call".into(),
        payoff,
    }])
    .expect("fixture is valid")
}

pub const GRID_STEPS: i64 = 16;

/// Knock-in call `(x2 - K)⁺·1{x1 ≤ b} + c·1{x1 > b} - c`.
pub fn knock_in_payoff(x1: &Rational, x2: &Rational, strike: &Rational, b: &Rational, c: &Rational) -> Rational {
    if x1 <= b {
        (x2 - strike).positive_part() - c
    } else {
        Rational::zero()
    }
}

/// The two-period grid market `S0 = 2`, `(S1, S2) ∈ {0, 1/4, ..., 4}²`, with
/// knock-in calls at strikes 2 and 1, cost `1/4` and knock-in level `b`.
/// Scenario `g{i}_{j}` has `S1 = i/4` and `S2 = j/4`.
pub fn knock_in_grid(b: Rational) -> MarketModel {
    let strikes = [int(2), int(1)];
    let c = rat(1, 4);
    let mut scenarios = Vec::new();
    let mut payoffs = vec![Vec::new(), Vec::new()];
    for i in 0..=GRID_STEPS {
        for j in 0..=GRID_STEPS {
            let x1 = rat(i, 4);
            let x2 = rat(j, 4);
            for (k, strike) in strikes.iter().enumerate() {
                payoffs[k].push(knock_in_payoff(&x1, &x2, strike, &b, &c));
            }
            scenarios.push(Scenario {
                id: format!("g{i}_{j}"),
                prices: vec![vec![int(2)], vec![x1], vec![x2]],
                factors: vec![vec![], vec![], vec![]],
            });
        }
    }
    let options = payoffs
        .into_iter()
        .enumerate()
        .map(|(k, payoff)| OptionPayoff {
            name: format!("phi{}", k + 1),
            payoff,
        })
        .collect();
    MarketModel::new(2, 1, 0, scenarios, None, options).expect("fixture is valid")
}

/// Index of grid scenario `(S1, S2) = (i/4, j/4)`.
pub fn grid_index(i: i64, j: i64) -> usize {
    (i * (GRID_STEPS + 1) + j) as usize
}
