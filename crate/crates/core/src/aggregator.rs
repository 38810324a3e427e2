//! Conditional splitting of a scenario set, the backward recursion for the
//! efficient set, and the arbitrage aggregator of a market without options.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::max_support_separator;
use crate::model::{FiltrationLabel, FiltrationPartition, Mark, MarketModel, ScenarioSet, Strategy};
use crate::rational::Rational;

/// Result of splitting `gamma` at time `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitResult {
    pub t: usize,
    pub gamma: ScenarioSet,
    pub beta: usize,
    /// `separators[i - 1][w]` is `H^i` on the time-`t-1` atom of `w`; atoms
    /// that need fewer than `i` rounds carry the zero vector.
    pub separators: Vec<Vec<Vec<Rational>>>,
    /// `cells[0]` is the kernel `B^0`, `cells[i]` the strict cell `B^i`.
    pub cells: Vec<ScenarioSet>,
}

impl SplitResult {
    /// Union of the strict cells `B^1, ..., B^β`.
    pub fn peeled(&self) -> ScenarioSet {
        self.cells[1..].iter().flatten().copied().collect()
    }
}

/// Splits `gamma` atom by atom of the natural filtration at `t - 1`: the
/// increments `ΔS_t` of the atom's scenarios in `gamma` are repeatedly
/// separated by the maximal separator, strict points are peeled into the
/// next cell, and what remains when the origin lies in the relative interior
/// forms the kernel `B^0`.
pub fn conditional_split(market: &MarketModel, t: usize, gamma: &ScenarioSet) -> Result<SplitResult> {
    if t < 1 || t > market.horizon() {
        return Err(Error::Precondition(format!(
            "split time {t} outside 1..={}",
            market.horizon()
        )));
    }
    let n = market.num_scenarios();
    let d = market.num_assets();
    let mut separators: Vec<Vec<Vec<Rational>>> = Vec::new();
    let mut cells: Vec<ScenarioSet> = vec![ScenarioSet::new()];
    for atom in market.natural_filtration().atoms(t - 1) {
        let mut remaining: Vec<usize> = atom.iter().copied().filter(|w| gamma.contains(w)).collect();
        let mut round = 0;
        while !remaining.is_empty() {
            let points: Vec<Vec<Rational>> = remaining.iter().map(|&w| market.delta_s(w, t)).collect();
            let sep = max_support_separator(&points)?;
            if sep.strict.is_empty() {
                break;
            }
            round += 1;
            if separators.len() < round {
                separators.push(vec![vec![Rational::zero(); d]; n]);
                cells.push(ScenarioSet::new());
            }
            for &w in atom {
                separators[round - 1][w].clone_from(&sep.h);
            }
            cells[round].extend(sep.strict.iter().map(|&i| remaining[i]));
            remaining = remaining
                .iter()
                .enumerate()
                .filter(|(i, _)| !sep.strict.contains(i))
                .map(|(_, &w)| w)
                .collect();
        }
        cells[0].extend(remaining);
    }
    Ok(SplitResult {
        t,
        gamma: gamma.clone(),
        beta: separators.len(),
        separators,
        cells,
    })
}

/// The ladder `Ω_T ⊇ ... ⊇ Ω_0` and the splits that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EfficientLadder {
    /// `ladder[t]` is `Ω_t`.
    pub ladder: Vec<ScenarioSet>,
    /// `splits[t - 1]` is the split of `Ω_t` at time `t`.
    pub splits: Vec<SplitResult>,
    /// `Ω* = Ω_0`.
    pub efficient: ScenarioSet,
}

/// Backward recursion `Ω_T = Ω`, `Ω_{t-1} = Ω_t ∖ (B^1_t ∪ ... ∪ B^β_t)`.
pub fn efficient_scenarios(market: &MarketModel) -> Result<EfficientLadder> {
    efficient_scenarios_on(market, market.omega())
}

/// Same recursion started from an arbitrary (possibly empty) set.
pub fn efficient_scenarios_on(market: &MarketModel, omega: &ScenarioSet) -> Result<EfficientLadder> {
    let horizon = market.horizon();
    let mut ladder = vec![ScenarioSet::new(); horizon + 1];
    ladder[horizon] = omega.clone();
    let mut splits = Vec::with_capacity(horizon);
    for t in (1..=horizon).rev() {
        let split = conditional_split(market, t, &ladder[t])?;
        ladder[t - 1] = &ladder[t] - &split.peeled();
        splits.push(split);
    }
    splits.reverse();
    Ok(EfficientLadder {
        efficient: ladder[0].clone(),
        ladder,
        splits,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregatorResult {
    pub omega_ladder: Vec<ScenarioSet>,
    pub efficient_set: ScenarioSet,
    pub splits: Vec<SplitResult>,
    /// `H*_t = Σ_i H^i_t 1_{B^i_t}`; option positions are zero.
    pub h_star: Strategy,
    /// Natural filtration enlarged by `H*_{t+1}` at each time `t`.
    pub filtration: Arc<FiltrationPartition>,
}

/// `H*_t` on every scenario, for `t = 1..=T`.
pub(crate) fn aggregator_holdings(market: &MarketModel, splits: &[SplitResult]) -> Vec<Vec<Vec<Rational>>> {
    let n = market.num_scenarios();
    let d = market.num_assets();
    splits
        .iter()
        .map(|split| {
            let mut h = vec![vec![Rational::zero(); d]; n];
            for (i, cell) in split.cells.iter().enumerate().skip(1) {
                for &w in cell {
                    h[w].clone_from(&split.separators[i - 1][w]);
                }
            }
            h
        })
        .collect()
}

/// Marks for the components of a trading process, each entering one period
/// before it is used.
pub(crate) fn holding_marks(holdings: &[Vec<Vec<Rational>>]) -> Vec<Mark> {
    holdings
        .iter()
        .enumerate()
        .map(|(i, h)| Mark::process_component(i + 1, h.clone()))
        .collect()
}

/// Builds `H*` from the splits of [`efficient_scenarios`] together with the
/// enlarged filtration under which it is predictable.
pub fn build_aggregator(market: &MarketModel) -> Result<AggregatorResult> {
    build_aggregator_on(market, market.omega())
}

pub fn build_aggregator_on(market: &MarketModel, omega: &ScenarioSet) -> Result<AggregatorResult> {
    let ladder = efficient_scenarios_on(market, omega)?;
    let holdings = aggregator_holdings(market, &ladder.splits);
    let filtration = Arc::new(
        market
            .natural_filtration()
            .refine(&holding_marks(&holdings), FiltrationLabel::Enlarged),
    );
    let mut h_star = Strategy::zero(market, filtration.clone());
    h_star.holdings = holdings;
    Ok(AggregatorResult {
        omega_ladder: ladder.ladder,
        efficient_set: ladder.efficient,
        splits: ladder.splits,
        h_star,
        filtration,
    })
}
