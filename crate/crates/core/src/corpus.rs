//! Seeded random markets, strategies, payoffs and measures for property
//! tests and fuzzing.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::measures::{CalibratedMeasureProblem, MeasureObjective};
use crate::model::{FiltrationPartition, FiniteMeasure, MarketModel, OptionPayoff, Scenario, ScenarioSet, Strategy};
use crate::rational::{int, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusConfig {
    pub max_scenarios: usize,
    pub max_horizon: usize,
    pub max_assets: usize,
    pub max_options: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            max_scenarios: 12,
            max_horizon: 3,
            max_assets: 2,
            max_options: 2,
        }
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn small_rational(r: &mut ChaCha8Rng, range: i64) -> Rational {
    let den = *[1, 1, 2, 3].choose(r).expect("nonempty");
    Rational::new(r.gen_range(-range * den..=range * den), den)
}

struct Path {
    prices: Vec<Vec<Rational>>,
    factors: Vec<Vec<Rational>>,
}

/// Increments for the children of one node. Most nodes are balanced: the
/// last increment is the negated sum of the others, so zero is their mean.
fn child_increments(r: &mut ChaCha8Rng, d: usize, count: usize) -> Vec<Vec<Rational>> {
    let mut incs: Vec<Vec<Rational>> = (0..count)
        .map(|_| (0..d).map(|_| small_rational(r, 2)).collect())
        .collect();
    if r.gen_bool(0.7) {
        let mut balance = vec![Rational::zero(); d];
        for inc in &incs[..count - 1] {
            for (b, v) in balance.iter_mut().zip(inc) {
                *b -= v;
            }
        }
        incs[count - 1] = balance;
    }
    incs
}

/// A random market on a scenario tree with at most `cfg.max_scenarios`
/// leaves, a random nonempty `Ω`, and up to `cfg.max_options` options that
/// are usually, but not always, priced consistently.
pub fn random_market(seed: u64, cfg: &CorpusConfig) -> MarketModel {
    let r = &mut rng(seed, 0);
    let horizon = r.gen_range(1..=cfg.max_horizon.max(1));
    let d = r.gen_range(1..=cfg.max_assets.max(1));
    let d_factors = usize::from(r.gen_bool(0.25));
    let s0: Vec<Rational> = (0..d).map(|_| int(r.gen_range(1..=4))).collect();
    let mut paths = vec![Path {
        prices: vec![s0],
        factors: vec![vec![Rational::zero(); d_factors]],
    }];
    for _ in 1..=horizon {
        let mut next = Vec::new();
        let mut budget = cfg.max_scenarios.max(1);
        for (idx, path) in paths.iter().enumerate() {
            // Leave room for at least one child of every remaining node.
            let remaining_nodes = paths.len() - idx - 1;
            let room = budget - remaining_nodes;
            let count = r.gen_range(1..=room.clamp(1, 3));
            budget -= count;
            for inc in child_increments(r, d, count) {
                let last = path.prices.last().expect("nonempty path");
                let mut prices = path.prices.clone();
                prices.push(last.iter().zip(&inc).map(|(a, b)| a + b).collect());
                let mut factors = path.factors.clone();
                factors.push((0..d_factors).map(|_| int(r.gen_range(0..=1))).collect());
                next.push(Path { prices, factors });
            }
        }
        paths = next;
    }
    // Occasionally repeat a path under a fresh id.
    if paths.len() < cfg.max_scenarios && r.gen_bool(0.2) {
        let i = r.gen_range(0..paths.len());
        let copy = Path {
            prices: paths[i].prices.clone(),
            factors: paths[i].factors.clone(),
        };
        paths.push(copy);
    }
    let n = paths.len();
    let scenarios: Vec<Scenario> = paths
        .into_iter()
        .enumerate()
        .map(|(i, p)| Scenario {
            id: format!("w{i}"),
            prices: p.prices,
            factors: p.factors,
        })
        .collect();
    let omega: ScenarioSet = if r.gen_bool(0.5) {
        (0..n).collect()
    } else {
        let mut set: ScenarioSet = (0..n).filter(|_| r.gen_bool(0.75)).collect();
        if set.is_empty() {
            set.insert(r.gen_range(0..n));
        }
        set
    };
    let base =
        MarketModel::new(horizon, d, d_factors, scenarios, Some(omega), vec![]).expect("generated market is valid");

    let k = r.gen_range(0..=cfg.max_options);
    if k == 0 {
        return base;
    }
    let objective: Vec<Rational> = (0..n).map(|_| small_rational(r, 3)).collect();
    let pricing = CalibratedMeasureProblem::new(&base, MeasureObjective::MaxExpectation(objective))
        .solve()
        .expect("well-formed program")
        .map(|s| s.measure);
    let options = (0..k)
        .map(|j| {
            let payoff: Vec<Rational> = if r.gen_bool(0.15) {
                // Buy-and-hold in the first asset: replicable.
                (0..n)
                    .map(|w| &base.price(w, horizon)[0] - &base.price(w, 0)[0])
                    .collect()
            } else {
                let f: Vec<Rational> = (0..n).map(|_| small_rational(r, 3)).collect();
                let shift = match &pricing {
                    Some(q) => q.expectation(&f),
                    None => Rational::zero(),
                };
                let perturb = if r.gen_bool(0.25) {
                    Rational::new(r.gen_range(-2..=2), r.gen_range(1..=4))
                } else {
                    Rational::zero()
                };
                f.iter().map(|v| v - &shift + &perturb).collect()
            };
            OptionPayoff {
                name: format!("phi{}", j + 1),
                payoff,
            }
        })
        .collect();
    base.with_option_payoffs(options).expect("payoffs cover every scenario")
}

/// A random strategy predictable with respect to `filtration`.
pub fn random_strategy(market: &MarketModel, filtration: Arc<FiltrationPartition>, seed: u64) -> Strategy {
    let r = &mut rng(seed, 1);
    let mut s = Strategy::zero(market, filtration.clone());
    for atom in filtration.atoms(0) {
        let alpha: Vec<Rational> = (0..market.num_options()).map(|_| small_rational(r, 2)).collect();
        for &w in atom {
            s.alpha[w].clone_from(&alpha);
        }
    }
    for t in 1..=market.horizon() {
        for atom in filtration.atoms(t - 1) {
            let h: Vec<Rational> = (0..market.num_assets()).map(|_| small_rational(r, 2)).collect();
            s.set_holding(t, atom, &h);
        }
    }
    s
}

/// A random rational payoff on every scenario.
pub fn random_payoff(market: &MarketModel, seed: u64) -> Vec<Rational> {
    let r = &mut rng(seed, 2);
    (0..market.num_scenarios()).map(|_| small_rational(r, 4)).collect()
}

/// A random probability on the scenario space, with full support or with a
/// random nonempty support.
pub fn random_measure(market: &MarketModel, seed: u64, full_support: bool) -> FiniteMeasure {
    let r = &mut rng(seed, 3);
    let n = market.num_scenarios();
    let mut raw: Vec<i64> = (0..n).map(|_| r.gen_range(1..=5)).collect();
    if !full_support {
        for v in raw.iter_mut() {
            if r.gen_bool(0.4) {
                *v = 0;
            }
        }
        if raw.iter().all(|&v| v == 0) {
            raw[r.gen_range(0..n)] = 1;
        }
    }
    let total: i64 = raw.iter().sum();
    FiniteMeasure::new(raw.into_iter().map(|v| Rational::new(v, total)).collect()).expect("normalized weights")
}
