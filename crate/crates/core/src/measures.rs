//! Calibrated martingale measures: the measure polytope, the per-scenario
//! oracle for `Ω*_Φ`, explicit one-step kernels, polar sets, the completed
//! filtration and calibration mixing.

use serde::Serialize;

use crate::aggregator::efficient_scenarios;
use crate::error::{Error, Result};
use crate::lp::{lp_solve, zero_convex_combination, LinearProgram, LpOutcome, Relation, Sense};
use crate::model::{FiltrationLabel, FiltrationPartition, FiniteMeasure, MarketModel, ScenarioSet};
use crate::rational::{dot, Rational};

/// What to optimise over the calibrated martingale measures of a market.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeasureObjective {
    Feasibility,
    MaxWeight(usize),
    MaxMass(ScenarioSet),
    MaxExpectation(Vec<Rational>),
    MinExpectation(Vec<Rational>),
}

/// Probabilities `Q` on `support` (by default `Ω`) under which `S` is a
/// martingale in the natural filtration and every option of the market has
/// zero expectation. Options are selected by restricting the market.
#[derive(Debug, Clone)]
pub struct CalibratedMeasureProblem<'a> {
    pub market: &'a MarketModel,
    pub support: ScenarioSet,
    pub objective: MeasureObjective,
}

/// An optimal value together with an optimal measure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeasureSolution {
    pub value: Rational,
    #[serde(skip)]
    pub measure: FiniteMeasure,
}

/// The measure polytope as a linear program. Column `i < scenarios.len()` is
/// `Q(scenarios[i])`; `extra` free columns follow with zero coefficients.
pub(crate) struct MeasureLp {
    pub lp: LinearProgram,
    pub scenarios: Vec<usize>,
}

pub(crate) fn measure_lp(market: &MarketModel, support: &ScenarioSet, extra: usize, sense: Sense) -> MeasureLp {
    let scenarios: Vec<usize> = support.iter().copied().collect();
    let n = scenarios.len();
    let mut lp = LinearProgram::new(sense, vec![Rational::zero(); n + extra]);
    for j in n..n + extra {
        lp.set_free(j);
    }
    let ones: Vec<(usize, Rational)> = (0..n).map(|i| (i, Rational::one())).collect();
    lp.add_sparse(&ones, Relation::Eq, Rational::one());
    for t in 1..=market.horizon() {
        let increments: Vec<Vec<Rational>> = scenarios.iter().map(|&w| market.delta_s(w, t)).collect();
        for atom in market.natural_filtration().atoms(t - 1) {
            for asset in 0..market.num_assets() {
                let row: Vec<(usize, Rational)> = (0..n)
                    .filter(|&i| atom.binary_search(&scenarios[i]).is_ok())
                    .map(|i| (i, increments[i][asset].clone()))
                    .filter(|(_, v)| !v.is_zero())
                    .collect();
                if !row.is_empty() {
                    lp.add_sparse(&row, Relation::Eq, Rational::zero());
                }
            }
        }
    }
    for option in market.options() {
        let row: Vec<(usize, Rational)> = (0..n)
            .map(|i| (i, option.payoff[scenarios[i]].clone()))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        if !row.is_empty() {
            lp.add_sparse(&row, Relation::Eq, Rational::zero());
        }
    }
    MeasureLp { lp, scenarios }
}

pub(crate) fn measure_from_primal(market: &MarketModel, scenarios: &[usize], primal: &[Rational]) -> FiniteMeasure {
    let mut weights = vec![Rational::zero(); market.num_scenarios()];
    for (i, &w) in scenarios.iter().enumerate() {
        weights[w] = primal[i].clone();
    }
    FiniteMeasure::new(weights).expect("the polytope only contains probabilities")
}

impl<'a> CalibratedMeasureProblem<'a> {
    pub fn new(market: &'a MarketModel, objective: MeasureObjective) -> Self {
        CalibratedMeasureProblem {
            market,
            support: market.omega().clone(),
            objective,
        }
    }

    /// Restricts the admissible support to `support` instead of `Ω`.
    pub fn on(mut self, support: ScenarioSet) -> Self {
        self.support = support;
        self
    }

    /// Optimal value and measure, or `None` when no measure exists.
    pub fn solve(&self) -> Result<Option<MeasureSolution>> {
        let market = self.market;
        if self.support.is_empty() {
            return Ok(None);
        }
        let per_scenario =
            |f: &dyn Fn(usize) -> Rational| -> Vec<Rational> { self.support.iter().map(|&w| f(w)).collect() };
        let (sense, objective) = match &self.objective {
            MeasureObjective::Feasibility => (Sense::Max, per_scenario(&|_| Rational::zero())),
            MeasureObjective::MaxWeight(target) => (
                Sense::Max,
                per_scenario(&|w| {
                    if w == *target {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                }),
            ),
            MeasureObjective::MaxMass(set) => (
                Sense::Max,
                per_scenario(&|w| {
                    if set.contains(&w) {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                }),
            ),
            MeasureObjective::MaxExpectation(g) | MeasureObjective::MinExpectation(g) => {
                if g.len() != market.num_scenarios() {
                    return Err(Error::Dimension(format!(
                        "payoff has {} entries for {} scenarios",
                        g.len(),
                        market.num_scenarios()
                    )));
                }
                let sense = if matches!(self.objective, MeasureObjective::MaxExpectation(_)) {
                    Sense::Max
                } else {
                    Sense::Min
                };
                (sense, per_scenario(&|w| g[w].clone()))
            }
        };
        let MeasureLp { mut lp, scenarios } = measure_lp(market, &self.support, 0, sense);
        lp.objective = objective;
        match lp_solve(&lp)? {
            LpOutcome::Optimal { value, primal, .. } => Ok(Some(MeasureSolution {
                value,
                measure: measure_from_primal(market, &scenarios, &primal),
            })),
            LpOutcome::Infeasible { .. } => Ok(None),
            LpOutcome::Unbounded { .. } => Err(Error::InvariantBreach("the measure polytope is bounded".into())),
        }
    }
}

/// Some calibrated martingale measure on `Ω`, if there is one.
pub fn find_calibrated_measure(market: &MarketModel) -> Result<Option<FiniteMeasure>> {
    Ok(CalibratedMeasureProblem::new(market, MeasureObjective::Feasibility)
        .solve()?
        .map(|s| s.measure))
}

/// Exact check, independent of any solver, that `q` is a martingale measure
/// in the natural filtration with zero expectation for every option.
pub fn satisfies_martingale_and_calibration(market: &MarketModel, q: &FiniteMeasure) -> bool {
    let martingale = (1..=market.horizon()).all(|t| {
        market.natural_filtration().atoms(t - 1).iter().all(|atom| {
            let mut total = vec![Rational::zero(); market.num_assets()];
            for &w in atom {
                for (acc, v) in total.iter_mut().zip(market.delta_s(w, t)) {
                    *acc += q.weight(w) * v;
                }
            }
            total.iter().all(Rational::is_zero)
        })
    });
    martingale && market.options().iter().all(|o| q.expectation(&o.payoff).is_zero())
}

/// [`satisfies_martingale_and_calibration`] plus `supp(q) ⊆ Ω`.
pub fn is_calibrated_martingale_measure(market: &MarketModel, q: &FiniteMeasure) -> bool {
    q.weights().len() == market.num_scenarios()
        && q.support().is_subset(market.omega())
        && satisfies_martingale_and_calibration(market, q)
}

/// Weights on `Σ^ω_{t-1} ∩ b0`, strictly positive on `omega`, under which
/// `S_{t-1}` is the mean of `S_t`. Returned as `(scenario, weight)` pairs with
/// positive weight.
pub fn one_step_calibrating_kernel(
    market: &MarketModel,
    t: usize,
    omega: usize,
    b0: &ScenarioSet,
) -> Result<Vec<(usize, Rational)>> {
    if t < 1 || t > market.horizon() {
        return Err(Error::Precondition(format!(
            "time {t} outside 1..={}",
            market.horizon()
        )));
    }
    if !b0.contains(&omega) {
        return Err(Error::Precondition(format!(
            "scenario {:?} is not in the kernel cell",
            market.scenario_id(omega)
        )));
    }
    let f = market.natural_filtration();
    let members: Vec<usize> = f.atoms(t - 1)[f.atom_of(t - 1, omega)]
        .iter()
        .copied()
        .filter(|w| b0.contains(w))
        .collect();
    let points: Vec<Vec<Rational>> = members.iter().map(|&w| market.delta_s(w, t)).collect();
    let target = members.iter().position(|&w| w == omega).expect("omega is a member");
    let weights = zero_convex_combination(&points, target)?;
    Ok(members
        .into_iter()
        .zip(weights)
        .filter(|(_, l)| l.is_positive())
        .collect())
}

/// A martingale measure (ignoring options) charging `omega_star`, built
/// forward from one-step kernels on the efficient ladder.
pub fn measure_charging_scenario(market: &MarketModel, omega_star: usize) -> Result<FiniteMeasure> {
    let ladder = efficient_scenarios(market)?;
    if !ladder.efficient.contains(&omega_star) {
        return Err(Error::Precondition(format!(
            "scenario {:?} is not efficient",
            market.scenario_id(omega_star)
        )));
    }
    let n = market.num_scenarios();
    let mut mass = vec![Rational::zero(); n];
    mass[omega_star] = Rational::one();
    for t in 1..=market.horizon() {
        let mut next = vec![Rational::zero(); n];
        for w in 0..n {
            if mass[w].is_zero() {
                continue;
            }
            for (v, l) in one_step_calibrating_kernel(market, t, w, &ladder.ladder[t - 1])? {
                next[v] += &mass[w] * &l;
            }
        }
        mass = next;
    }
    FiniteMeasure::new(mass)
}

/// `max Q(omega)` over calibrated martingale measures, or `None` when there
/// are none.
pub fn max_weight_measure(market: &MarketModel, omega: usize) -> Result<Option<MeasureSolution>> {
    CalibratedMeasureProblem::new(market, MeasureObjective::MaxWeight(omega)).solve()
}

/// `Ω*_Φ`: the scenarios charged by some calibrated martingale measure, by
/// one max-weight program per scenario not yet charged by an earlier
/// optimal measure.
pub fn efficient_set_oracle(market: &MarketModel) -> Result<ScenarioSet> {
    let mut charged = ScenarioSet::new();
    if find_calibrated_measure(market)?.is_none() {
        return Ok(charged);
    }
    for &w in market.omega() {
        if charged.contains(&w) {
            continue;
        }
        if let Some(sol) = max_weight_measure(market, w)? {
            if sol.value.is_positive() {
                charged.extend(sol.measure.support());
            }
        }
    }
    Ok(charged)
}

/// True iff every calibrated martingale measure gives `a` zero mass.
pub fn is_polar(market: &MarketModel, a: &ScenarioSet) -> Result<bool> {
    if a.is_empty() {
        return Ok(true);
    }
    let sol = CalibratedMeasureProblem::new(market, MeasureObjective::MaxMass(a.clone())).solve()?;
    Ok(sol.is_none_or(|s| s.value.is_zero()))
}

/// The natural filtration completed by the polar sets: inside each natural
/// atom the efficient scenarios stay together and every other scenario
/// becomes its own atom.
pub fn completed_filtration(market: &MarketModel) -> Result<FiltrationPartition> {
    let efficient = efficient_set_oracle(market)?;
    let natural = market.natural_filtration();
    let atoms = (0..=market.horizon())
        .map(|t| {
            let mut level = Vec::new();
            for atom in natural.atoms(t) {
                let (inside, outside): (Vec<usize>, Vec<usize>) = atom.iter().partition(|w| efficient.contains(w));
                if !inside.is_empty() {
                    level.push(inside);
                }
                level.extend(outside.into_iter().map(|w| vec![w]));
            }
            level
        })
        .collect();
    FiltrationPartition::from_atoms(FiltrationLabel::Completed, market.num_scenarios(), atoms)
}

/// Mixes `q` with `q_minus` (if `E_q[φ] ≥ 0`) or `q_plus` (otherwise) so that
/// the result prices `φ` at zero.
pub fn mix_calibrate(
    q: &FiniteMeasure,
    q_plus: &FiniteMeasure,
    q_minus: &FiniteMeasure,
    phi: &[Rational],
) -> Result<FiniteMeasure> {
    let len = q.weights().len();
    if q_plus.weights().len() != len || q_minus.weights().len() != len || phi.len() != len {
        return Err(Error::Dimension("measures and payoff differ in length".into()));
    }
    let e_plus = dot(q_plus.weights(), phi);
    let e_minus = dot(q_minus.weights(), phi);
    if !e_plus.is_positive() || !e_minus.is_negative() {
        return Err(Error::Precondition(format!(
            "need E[φ] > 0 under q_plus and < 0 under q_minus, got {e_plus} and {e_minus}"
        )));
    }
    let e = dot(q.weights(), phi);
    let (other, e_other) = if e.is_negative() {
        (q_plus, e_plus)
    } else {
        (q_minus, e_minus)
    };
    let lambda = &e_other / &(&e_other - &e);
    Ok(q.mix(&lambda, other))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{random_market, CorpusConfig};
    use crate::fixtures;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    fn set(v: &[usize]) -> ScenarioSet {
        v.iter().copied().collect()
    }

    #[test]
    fn kernels() {
        let m1 = fixtures::m1();
        assert_eq!(
            one_step_calibrating_kernel(&m1, 1, 0, &set(&[0, 1])).unwrap(),
            vec![(0, rat(1, 2)), (1, rat(1, 2))]
        );
        let m2 = fixtures::m2();
        assert_eq!(
            one_step_calibrating_kernel(&m2, 1, 0, &set(&[0])).unwrap(),
            vec![(0, int(1))]
        );
        assert!(matches!(
            one_step_calibrating_kernel(&m2, 1, 1, &set(&[0])),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn grid_kernel_pairs_high_with_low() {
        let m = fixtures::knock_in_grid(rat(3, 2));
        let w = fixtures::grid_index(14, 0);
        let kernel = one_step_calibrating_kernel(&m, 1, w, &m.all_scenarios()).unwrap();
        assert!(kernel.iter().any(|&(v, _)| v == w));
        assert!(kernel.iter().any(|&(v, _)| m.price(v, 1)[0] < int(2)));
        let drift: Rational = kernel.iter().map(|(v, l)| l * &m.delta_s(*v, 1)[0]).sum();
        assert!(drift.is_zero());
    }

    #[test]
    fn charging_measures() {
        let m1 = fixtures::m1();
        assert_eq!(
            measure_charging_scenario(&m1, 0).unwrap().weights(),
            &[rat(1, 2), rat(1, 2)]
        );
        let m2 = fixtures::m2();
        assert_eq!(measure_charging_scenario(&m2, 0).unwrap(), FiniteMeasure::dirac(2, 0));
        assert!(matches!(measure_charging_scenario(&m2, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn max_weight_examples() {
        let sol = max_weight_measure(&fixtures::m1(), 0).unwrap().unwrap();
        assert_eq!(sol.value, rat(1, 2));
        let m4 = fixtures::m4(rat(1, 2));
        assert!(max_weight_measure(&m4, 0).unwrap().unwrap().value.is_positive());
        assert!(max_weight_measure(&m4, 1).unwrap().unwrap().value.is_positive());
        assert!(max_weight_measure(&fixtures::m4(rat(3, 5)), 0).unwrap().is_none());
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(efficient_set_oracle(&fixtures::m1()).unwrap(), set(&[0, 1]));
        assert_eq!(efficient_set_oracle(&fixtures::m2()).unwrap(), set(&[0]));
        assert_eq!(efficient_set_oracle(&fixtures::m3()).unwrap(), set(&[]));
        assert_eq!(
            efficient_set_oracle(&fixtures::knock_in_grid(int(4))).unwrap(),
            set(&[])
        );
    }

    #[test]
    fn polar_examples() {
        assert!(is_polar(&fixtures::m2(), &set(&[1])).unwrap());
        assert!(!is_polar(&fixtures::m1(), &set(&[0])).unwrap());
        assert!(is_polar(&fixtures::m1(), &set(&[])).unwrap());
        assert!(is_polar(&fixtures::m3(), &set(&[0])).unwrap());
    }

    #[test]
    fn completed_filtration_examples() {
        let m1 = fixtures::m1();
        assert_eq!(
            &completed_filtration(&m1).unwrap().atoms(0),
            &m1.natural_filtration().atoms(0)
        );
        let f = completed_filtration(&fixtures::m2()).unwrap();
        assert_eq!(f.atoms(0), &[vec![0], vec![1]]);
        let f = completed_filtration(&fixtures::m3()).unwrap();
        assert_eq!(f, FiltrationPartition::discrete(FiltrationLabel::Completed, 2, 1));
    }

    #[test]
    fn mixing_examples() {
        let phi = vec![int(1), int(-1)];
        let q = FiniteMeasure::new(vec![rat(1, 2), rat(1, 2)]).unwrap();
        let plus = FiniteMeasure::dirac(2, 0);
        let minus = FiniteMeasure::dirac(2, 1);
        assert_eq!(mix_calibrate(&q, &plus, &minus, &phi).unwrap(), q);

        // E_q[φ] = 1 against E_{q_minus}[φ] = -1.
        let phi = vec![int(1), int(-1), int(3)];
        let q = FiniteMeasure::dirac(3, 0);
        let minus = FiniteMeasure::dirac(3, 1);
        let plus = FiniteMeasure::dirac(3, 2);
        let mixed = mix_calibrate(&q, &plus, &minus, &phi).unwrap();
        assert_eq!(mixed.weights(), &[rat(1, 2), rat(1, 2), int(0)]);

        // E_q[φ] = -2 against E_{q_plus}[φ] = 2.
        let phi = vec![int(-2), int(2), int(-1)];
        let q = FiniteMeasure::dirac(3, 0);
        let plus = FiniteMeasure::dirac(3, 1);
        let minus = FiniteMeasure::dirac(3, 2);
        let mixed = mix_calibrate(&q, &plus, &minus, &phi).unwrap();
        assert_eq!(mixed.weights(), &[rat(1, 2), rat(1, 2), int(0)]);
        assert!(mixed.expectation(&phi).is_zero());

        assert!(matches!(
            mix_calibrate(&q, &minus, &plus, &phi),
            Err(Error::Precondition(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]
        #[test]
        fn measures_verify_and_oracle_matches_ladder(seed in 0u64..10_000) {
            let m = random_market(seed, &CorpusConfig::default());
            let plain = m.without_options();
            let ladder = efficient_scenarios(&plain).unwrap();
            prop_assert_eq!(&efficient_set_oracle(&plain).unwrap(), &ladder.efficient);
            for &w in &ladder.efficient {
                let q = measure_charging_scenario(&plain, w).unwrap();
                prop_assert!(q.weight(w).is_positive());
                prop_assert!(q.support().is_subset(&ladder.efficient));
                prop_assert!(is_calibrated_martingale_measure(&plain, &q));
            }
            let feasible = find_calibrated_measure(&m).unwrap();
            let oracle = efficient_set_oracle(&m).unwrap();
            prop_assert_eq!(feasible.is_some(), !oracle.is_empty());
            if let Some(q) = feasible {
                prop_assert!(is_calibrated_martingale_measure(&m, &q));
            }
            for &w in m.omega() {
                let sol = max_weight_measure(&m, w).unwrap();
                let positive = sol.as_ref().is_some_and(|s| s.value.is_positive());
                prop_assert_eq!(positive, oracle.contains(&w));
                if let Some(s) = sol {
                    prop_assert!(is_calibrated_martingale_measure(&m, &s.measure));
                }
            }
            let f = completed_filtration(&m).unwrap();
            prop_assert!(f.is_filtration());
            prop_assert!(f.refines(m.natural_filtration()));
        }

        #[test]
        fn mixing_calibrates(seed in 0u64..10_000) {
            let m = random_market(seed, &CorpusConfig::default());
            let plain = m.without_options();
            if let Some(option) = m.options().first() {
                let phi = &option.payoff;
                let plus = CalibratedMeasureProblem::new(&plain, MeasureObjective::MaxExpectation(phi.clone())).solve().unwrap();
                let minus = CalibratedMeasureProblem::new(&plain, MeasureObjective::MinExpectation(phi.clone())).solve().unwrap();
                if let (Some(plus), Some(minus)) = (plus, minus) {
                    if plus.value.is_positive() && minus.value.is_negative() {
                        // Any point of the segment between the two extremes
                        // stays in the martingale polytope.
                        let lambda = Rational::new(1 + (seed % 5) as i64, 7);
                        let q = plus.measure.mix(&lambda, &minus.measure);
                        let mixed = mix_calibrate(&q, &plus.measure, &minus.measure, phi).unwrap();
                        prop_assert!(mixed.expectation(phi).is_zero());
                        prop_assert!(satisfies_martingale_and_calibration(&plain, &mixed));
                    }
                }
            }
        }
    }
}
