//! The pathspace partition scheme with statically traded options and the
//! combined arbitrage aggregator.

use std::sync::Arc;

use crate::aggregator::{aggregator_holdings, efficient_scenarios_on, holding_marks};
use crate::error::{Error, Result};
use crate::lp::{lp_solve, LinearProgram, LpOutcome, Relation, Sense};
use crate::model::{strategy_payoff, FiltrationLabel, FiltrationPartition, Mark, MarketModel, ScenarioSet, Strategy};
use crate::rational::Rational;
use crate::semistatic::StrategyVars;

/// A semi-static strategy `(α, H)` with `H` predictable in the natural
/// filtration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dominator {
    pub alpha: Vec<Rational>,
    pub strategy: Strategy,
    /// Total of the capped slacks `min(payoff, 1)` over the target set.
    pub score: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeResult {
    /// Number of semi-static steps.
    pub beta: usize,
    /// `alphas[i - 1]` is `α^i`.
    pub alphas: Vec<Vec<Rational>>,
    /// `dyn_strategies[i - 1]` is `(α^i, H^i)` in the natural filtration.
    pub dyn_strategies: Vec<Strategy>,
    /// `aggregators[i]` is `H̃^i`, the aggregator of `A_i` without options.
    pub aggregators: Vec<Strategy>,
    /// `a[i]` is `A_i`, `a_star[i]` is `A*_i`, for `i = 0..=β`.
    pub a: Vec<ScenarioSet>,
    pub a_star: Vec<ScenarioSet>,
    /// `A*_β ≠ ∅`.
    pub success: bool,
    /// The combined aggregator `(α*, H*)`, predictable in `filtration`.
    pub combined: Strategy,
    pub filtration: Arc<FiltrationPartition>,
}

/// Inverse of the `k × k` matrix whose columns are `basis`.
fn invert(basis: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let k = basis.len();
    // Augmented [M | I] with M[r][c] = basis[c][r].
    let mut m: Vec<Vec<Rational>> = (0..k)
        .map(|r| {
            let mut row: Vec<Rational> = (0..k).map(|c| basis[c][r].clone()).collect();
            row.extend((0..k).map(|c| if c == r { Rational::one() } else { Rational::zero() }));
            row
        })
        .collect();
    for col in 0..k {
        let pivot = (col..k).find(|&r| !m[r][col].is_zero()).expect("basis is invertible");
        m.swap(col, pivot);
        let inv = m[col][col].recip();
        for v in m[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..k {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (v, p) in m[r].iter_mut().zip(&pivot_row) {
                    *v -= &factor * p;
                }
            }
        }
    }
    m.into_iter().map(|row| row[k..].to_vec()).collect()
}

/// Rank of a list of vectors.
pub(crate) fn rank(vectors: &[Vec<Rational>]) -> usize {
    let mut rows: Vec<Vec<Rational>> = vectors.to_vec();
    let mut r = 0;
    let cols = rows.first().map_or(0, Vec::len);
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = &rows[i][c] / &rows[r][c];
                let pivot = rows[r].clone();
                for (v, q) in rows[i].iter_mut().zip(&pivot) {
                    *v -= &f * q;
                }
            }
        }
        r += 1;
    }
    r
}

/// Looks for `α` outside `span(span)` and natural-predictable `H` with
/// `α·Φ + (H∘S)_T ≥ 0` on `a_star`. The span is completed to a basis by
/// standard directions in index order; for each new direction and each sign
/// the coordinate of `α` along it is pinned to `±1` and the sum of capped
/// slacks is maximised. The best score wins, ties going to the lower
/// direction and then to `+1`.
pub fn find_dominating_semistatic(
    market: &MarketModel,
    a_star: &ScenarioSet,
    span: &[Vec<Rational>],
) -> Result<Option<Dominator>> {
    if a_star.is_empty() {
        return Err(Error::Precondition("target set is empty".into()));
    }
    let k = market.num_options();
    if span.iter().any(|v| v.len() != k) {
        return Err(Error::Dimension("span vectors must have one entry per option".into()));
    }
    if rank(span) != span.len() {
        return Err(Error::Precondition("span vectors are not linearly independent".into()));
    }
    let mut basis: Vec<Vec<Rational>> = span.to_vec();
    let mut completion = Vec::new();
    for e in 0..k {
        if basis.len() == k {
            break;
        }
        let mut unit = vec![Rational::zero(); k];
        unit[e] = Rational::one();
        basis.push(unit);
        if rank(&basis) == basis.len() {
            completion.push(basis.len() - 1);
        } else {
            basis.pop();
        }
    }
    if completion.is_empty() {
        return Ok(None);
    }
    let coords = invert(&basis);

    let members: Vec<usize> = a_star.iter().copied().collect();
    let vars = StrategyVars::new(market, market.natural_filtration().clone(), 0, false);
    let slack0 = vars.end();
    let mut objective = vec![Rational::zero(); slack0 + members.len()];
    for c in &mut objective[slack0..] {
        *c = Rational::one();
    }
    let mut template = LinearProgram::new(Sense::Max, objective);
    vars.set_free(&mut template);
    for (s, &w) in members.iter().enumerate() {
        template.set_bounds(slack0 + s, Some(Rational::zero()), Some(Rational::one()));
        let mut terms = vars.payoff_terms(market, w);
        terms.push((slack0 + s, -Rational::one()));
        template.add_sparse(&terms, Relation::Ge, Rational::zero());
    }
    let alpha_cols = vars.alpha_columns(0);

    let mut best: Option<Dominator> = None;
    for &q in &completion {
        for sign in [Rational::one(), -Rational::one()] {
            let mut lp = template.clone();
            let row: Vec<(usize, Rational)> = alpha_cols
                .iter()
                .zip(&coords[q])
                .filter(|(_, v)| !v.is_zero())
                .map(|(&c, v)| (c, v.clone()))
                .collect();
            lp.add_sparse(&row, Relation::Eq, sign);
            if let LpOutcome::Optimal { value, primal, .. } = lp_solve(&lp)? {
                if best.as_ref().is_none_or(|b| value > b.score) {
                    let strategy = vars.strategy(market, &primal);
                    best = Some(Dominator {
                        alpha: strategy.alpha[0].clone(),
                        strategy,
                        score: value,
                    });
                }
            }
        }
    }
    Ok(best)
}

/// `A_0 = Ω`; at round `i` the aggregator of `A_i` (without options) yields
/// `A*_i` and `H̃^i`; the scheme stops when `A*_i = ∅` (failure) or when no
/// semi-static strategy independent of `α^1..α^i` dominates zero on `A*_i`
/// (success), and otherwise continues on the zero set `A_{i+1}` of the
/// dominating payoff.
pub fn run_partition_scheme(market: &MarketModel) -> Result<SchemeResult> {
    let plain = market.without_options();
    let mut a = vec![market.omega().clone()];
    let mut a_star = Vec::new();
    let mut aggregators = Vec::new();
    let mut alphas: Vec<Vec<Rational>> = Vec::new();
    let mut dyn_strategies = Vec::new();
    let mut aggregator_processes = Vec::new();
    loop {
        let current = a.last().expect("ladder is nonempty");
        let ladder = efficient_scenarios_on(&plain, current)?;
        let holdings = aggregator_holdings(&plain, &ladder.splits);
        let mut h_tilde = Strategy::zero(market, market.natural_filtration().clone());
        h_tilde.holdings.clone_from(&holdings);
        aggregator_processes.push(holdings);
        aggregators.push(h_tilde);
        a_star.push(ladder.efficient.clone());
        if ladder.efficient.is_empty() {
            break;
        }
        let Some(dom) = find_dominating_semistatic(market, &ladder.efficient, &alphas)? else {
            break;
        };
        let next: ScenarioSet = ladder
            .efficient
            .iter()
            .copied()
            .filter(|&w| strategy_payoff(market, &dom.strategy, w).is_zero())
            .collect();
        alphas.push(dom.alpha);
        dyn_strategies.push(dom.strategy);
        a.push(next);
    }
    let beta = alphas.len();
    let success = !a_star[beta].is_empty();

    let n = market.num_scenarios();
    let mut marks: Vec<Mark> = a.iter().chain(&a_star).map(|s| Mark::set(s, n)).collect();
    for holdings in &aggregator_processes {
        marks.extend(holding_marks(holdings));
    }
    let filtration = Arc::new(market.natural_filtration().refine(&marks, FiltrationLabel::Enlarged));

    let mut combined = Strategy::zero(market, filtration.clone());
    for (i, dom) in dyn_strategies.iter().enumerate() {
        for &w in &a_star[i] {
            for (c, v) in combined.alpha[w].iter_mut().zip(&dom.alpha[w]) {
                *c += v;
            }
            for t in 1..=market.horizon() {
                for (c, v) in combined.holdings[t - 1][w].iter_mut().zip(dom.holding(t, w)) {
                    *c += v;
                }
            }
        }
    }
    for h_tilde in &aggregators {
        for t in 1..=market.horizon() {
            for w in 0..n {
                for (c, v) in combined.holdings[t - 1][w].iter_mut().zip(h_tilde.holding(t, w)) {
                    *c += v;
                }
            }
        }
    }

    Ok(SchemeResult {
        beta,
        alphas,
        dyn_strategies,
        aggregators,
        a,
        a_star,
        success,
        combined,
        filtration,
    })
}

/// The arbitrage aggregating filtration of a scheme run: the natural
/// filtration enlarged by the sets `A_i`, `A*_i` from time 0 and by the
/// components of every `H̃^i`, each entering one period before it is used.
pub fn scheme_filtration(result: &SchemeResult, market: &MarketModel) -> Result<Arc<FiltrationPartition>> {
    if result.filtration.num_scenarios() != market.num_scenarios() || result.filtration.horizon() != market.horizon() {
        return Err(Error::Precondition(
            "scheme result belongs to a different market".into(),
        ));
    }
    Ok(result.filtration.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::detect_strong;
    use crate::lp::{lp_solve, LpOutcome};
    use crate::measures::{completed_filtration, efficient_set_oracle, find_calibrated_measure};
    use crate::model::is_predictable;
    use crate::rational::{int, rat};
    use crate::{corpus, fixtures};
    use proptest::prelude::*;

    fn set(v: &[usize]) -> ScenarioSet {
        v.iter().copied().collect()
    }

    #[test]
    fn dominators_of_the_call_markets() {
        let m4 = fixtures::m4(rat(3, 5));
        let dom = find_dominating_semistatic(&m4, &m4.all_scenarios(), &[])
            .unwrap()
            .unwrap();
        assert_eq!(dom.alpha, vec![int(-1)]);
        let h = &dom.strategy.holding(1, 0)[0];
        assert!(*h >= rat(2, 5) && *h <= rat(3, 5));
        assert_eq!(dom.score, rat(1, 5));

        let m = fixtures::m4(rat(1, 2));
        let dom = find_dominating_semistatic(&m, &m.all_scenarios(), &[])
            .unwrap()
            .unwrap();
        assert_eq!(dom.alpha, vec![int(1)]);
        assert_eq!(dom.strategy.holding(1, 0), &[rat(-1, 2)]);
        assert_eq!(dom.strategy.payoffs(&m), vec![int(0), int(0)]);

        assert!(find_dominating_semistatic(&m, &m.all_scenarios(), &[vec![int(3)]])
            .unwrap()
            .is_none());
    }

    #[test]
    fn scheme_on_the_coin() {
        let m1 = fixtures::m1();
        let r = run_partition_scheme(&m1).unwrap();
        assert_eq!(r.beta, 0);
        assert!(r.success);
        assert_eq!(r.a_star[0], set(&[0, 1]));
        assert_eq!(r.combined.payoffs(&m1), vec![int(0), int(0)]);
        assert_eq!(*r.filtration.atoms(0), *m1.natural_filtration().atoms(0));
        assert_eq!(*r.filtration.atoms(1), *m1.natural_filtration().atoms(1));
    }

    #[test]
    fn scheme_on_the_overpriced_call_fails() {
        let m4 = fixtures::m4(rat(3, 5));
        let r = run_partition_scheme(&m4).unwrap();
        assert!(!r.success);
        assert!(r.a_star[r.beta].is_empty());
        for p in r.combined.payoffs(&m4) {
            assert!(p.is_positive());
        }
    }

    #[test]
    fn scheme_filtration_of_the_one_step_markets() {
        let m2 = fixtures::m2();
        let r = run_partition_scheme(&m2).unwrap();
        let f = scheme_filtration(&r, &m2).unwrap();
        assert_eq!(f.atoms(0), &[vec![0], vec![1]]);
        assert!(f.refines(m2.natural_filtration()));
        assert!(completed_filtration(&m2).unwrap().refines(&f));
    }

    #[test]
    fn rank_and_inverse() {
        assert_eq!(rank(&[vec![int(1), int(2)], vec![int(2), int(4)]]), 1);
        assert_eq!(rank(&[]), 0);
        let inv = invert(&[vec![int(2), int(0)], vec![int(1), int(1)]]);
        assert_eq!(inv, vec![vec![rat(1, 2), rat(-1, 2)], vec![int(0), int(1)]]);
    }

    /// Semi-static strategy `≥ 0` on `set`, `> 0` somewhere on it.
    fn one_point_on(m: &MarketModel, set: &ScenarioSet) -> bool {
        let members: Vec<usize> = set.iter().copied().collect();
        let vars = StrategyVars::new(m, m.natural_filtration().clone(), 0, false);
        let s0 = vars.end();
        let mut c = vec![Rational::zero(); s0 + members.len()];
        for v in &mut c[s0..] {
            *v = Rational::one();
        }
        let mut lp = LinearProgram::new(Sense::Max, c);
        vars.set_free(&mut lp);
        for (s, &w) in members.iter().enumerate() {
            lp.set_bounds(s0 + s, Some(int(0)), Some(int(1)));
            let mut terms = vars.payoff_terms(m, w);
            terms.push((s0 + s, int(-1)));
            lp.add_sparse(&terms, Relation::Ge, int(0));
        }
        match lp_solve(&lp).unwrap() {
            LpOutcome::Optimal { value, .. } => value.is_positive(),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(150))]
        #[test]
        fn scheme_invariants(seed in 0u64..10_000) {
            let m = corpus::random_market(seed, &corpus::CorpusConfig::default());
            let r = run_partition_scheme(&m).unwrap();
            prop_assert_eq!(rank(&r.alphas), r.beta);
            prop_assert!(r.beta <= m.num_options());
            for i in 1..=r.beta {
                for &w in &r.a_star[i - 1] {
                    let p = strategy_payoff(&m, &r.dyn_strategies[i - 1], w);
                    prop_assert!(!p.is_negative());
                    prop_assert_eq!(p.is_zero(), r.a[i].contains(&w));
                }
                prop_assert!(r.a[i].is_subset(&r.a_star[i - 1]));
            }
            prop_assert!(is_predictable(&m, &r.combined, &r.filtration));
            prop_assert!(r.filtration.refines(m.natural_filtration()));
            for &w in m.omega() {
                let p = strategy_payoff(&m, &r.combined, w);
                prop_assert!(!p.is_negative());
                prop_assert_eq!(p.is_zero(), r.a_star[r.beta].contains(&w));
            }
            let oracle = efficient_set_oracle(&m).unwrap();
            let feasible = find_calibrated_measure(&m).unwrap().is_some();
            prop_assert_eq!(r.success, feasible);
            if r.success {
                prop_assert_eq!(&r.a_star[r.beta], &oracle);
                prop_assert!(!one_point_on(&m, &r.a_star[r.beta]));
                prop_assert!(completed_filtration(&m).unwrap().refines(&r.filtration));
            }
            let strong = detect_strong(&m, &r.filtration).unwrap();
            prop_assert_eq!(strong.strategy.is_none(), r.success);
        }
    }
}
