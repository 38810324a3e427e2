//! Arbitrage detectors on a given filtration and the bridge to classical
//! no-arbitrage under a reference probability.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::aggregator::efficient_scenarios_on;
use crate::error::{Error, Result};
use crate::lp::{lp_solve, LinearProgram, LpOutcome, Relation, Sense};
use crate::measures::{measure_lp, CalibratedMeasureProblem, MeasureObjective};
use crate::model::{strategy_payoff, FiltrationPartition, FiniteMeasure, MarketModel, ScenarioSet, Strategy};
use crate::partition::run_partition_scheme;
use crate::rational::Rational;
use crate::semistatic::StrategyVars;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArbitrageKind {
    OnePoint,
    Strong,
    UniformlyStrong,
    #[serde(rename = "class_S")]
    ClassS,
}

/// Result of a detector: a witness strategy, or `None` together with the
/// dual solution of the detecting program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArbitrageFinding {
    pub kind: ArbitrageKind,
    pub strategy: Option<Strategy>,
    /// Uniform lower bound of the payoff on `Ω` (strong and uniformly strong).
    pub epsilon: Option<Rational>,
    /// Scenarios of `Ω` where the witness payoff is strictly positive.
    pub witness_set: ScenarioSet,
    /// Dual solution certifying that no witness exists.
    pub certificate: Option<Vec<Rational>>,
    /// For class-S findings, the member of the family the witness charges.
    pub charged_set: Option<ScenarioSet>,
    pub note: &'static str,
}

const FINITE_COLLAPSE: &str = "on a finite scenario set strong and uniformly strong arbitrage coincide; \
    separating them needs infinitely many scenarios";

impl ArbitrageFinding {
    pub fn found(&self) -> bool {
        self.strategy.is_some()
    }

    fn none(kind: ArbitrageKind, certificate: Vec<Rational>) -> Self {
        ArbitrageFinding {
            kind,
            strategy: None,
            epsilon: None,
            witness_set: ScenarioSet::new(),
            certificate: Some(certificate),
            charged_set: None,
            note: "",
        }
    }
}

fn positive_set(market: &MarketModel, strategy: &Strategy) -> ScenarioSet {
    market
        .omega()
        .iter()
        .copied()
        .filter(|&w| strategy_payoff(market, strategy, w).is_positive())
        .collect()
}

/// Re-checks a witness against its definition on `Ω`.
pub fn verify_finding(market: &MarketModel, finding: &ArbitrageFinding) -> bool {
    let Some(s) = &finding.strategy else {
        return true;
    };
    let payoffs: Vec<Rational> = market.omega().iter().map(|&w| strategy_payoff(market, s, w)).collect();
    let nonnegative = payoffs.iter().all(|p| !p.is_negative());
    match finding.kind {
        ArbitrageKind::OnePoint => nonnegative && payoffs.iter().any(Rational::is_positive),
        ArbitrageKind::Strong => payoffs.iter().all(Rational::is_positive),
        ArbitrageKind::UniformlyStrong => finding
            .epsilon
            .as_ref()
            .is_some_and(|e| e.is_positive() && payoffs.iter().all(|p| p >= e)),
        ArbitrageKind::ClassS => {
            nonnegative
                && finding
                    .charged_set
                    .as_ref()
                    .is_some_and(|a| a.iter().all(|&w| strategy_payoff(market, s, w).is_positive()))
        }
    }
}

fn check_filtration(market: &MarketModel, filtration: &FiltrationPartition) -> Result<()> {
    if filtration.num_scenarios() != market.num_scenarios() || filtration.horizon() != market.horizon() {
        return Err(Error::Dimension("filtration does not match the market".into()));
    }
    Ok(())
}

fn vars_for(market: &MarketModel, filtration: &FiltrationPartition, offset: usize) -> StrategyVars {
    StrategyVars::new(market, std::sync::Arc::new(filtration.clone()), offset, true)
}

/// Semi-static strategy, predictable in `filtration`, with payoff `≥ 0` on
/// `Ω` and `> 0` somewhere on `Ω`; found by maximising capped slacks.
pub fn detect_one_point(market: &MarketModel, filtration: &FiltrationPartition) -> Result<ArbitrageFinding> {
    check_filtration(market, filtration)?;
    let vars = vars_for(market, filtration, 0);
    let members: Vec<usize> = market.omega().iter().copied().collect();
    let s0 = vars.end();
    let mut c = vec![Rational::zero(); s0 + members.len()];
    for v in &mut c[s0..] {
        *v = Rational::one();
    }
    let mut lp = LinearProgram::new(Sense::Max, c);
    vars.set_free(&mut lp);
    for (s, &w) in members.iter().enumerate() {
        lp.set_bounds(s0 + s, Some(Rational::zero()), Some(Rational::one()));
        let mut terms = vars.payoff_terms(market, w);
        terms.push((s0 + s, -Rational::one()));
        lp.add_sparse(&terms, Relation::Ge, Rational::zero());
    }
    match lp_solve(&lp)? {
        LpOutcome::Optimal { value, primal, dual } => {
            if value.is_positive() {
                let strategy = vars.strategy(market, &primal);
                Ok(ArbitrageFinding {
                    kind: ArbitrageKind::OnePoint,
                    witness_set: positive_set(market, &strategy),
                    strategy: Some(strategy),
                    epsilon: None,
                    certificate: None,
                    charged_set: None,
                    note: "",
                })
            } else {
                Ok(ArbitrageFinding::none(ArbitrageKind::OnePoint, dual))
            }
        }
        _ => Err(Error::InvariantBreach("capped one-point program has an optimum".into())),
    }
}

/// `max δ` subject to payoff `≥ δ` on `Ω`, with every strategy coordinate in
/// `[-1, 1]`.
fn max_uniform_gain(
    market: &MarketModel,
    filtration: &FiltrationPartition,
    kind: ArbitrageKind,
) -> Result<ArbitrageFinding> {
    check_filtration(market, filtration)?;
    let vars = vars_for(market, filtration, 1);
    let mut c = vec![Rational::zero(); vars.end()];
    c[0] = Rational::one();
    let mut lp = LinearProgram::new(Sense::Max, c);
    lp.set_free(0);
    vars.set_box(&mut lp, &Rational::one());
    for &w in market.omega() {
        let mut terms = vars.payoff_terms(market, w);
        terms.push((0, -Rational::one()));
        lp.add_sparse(&terms, Relation::Ge, Rational::zero());
    }
    match lp_solve(&lp)? {
        LpOutcome::Optimal { value, primal, dual } => {
            if value.is_positive() {
                let strategy = vars.strategy(market, &primal);
                Ok(ArbitrageFinding {
                    kind,
                    witness_set: positive_set(market, &strategy),
                    strategy: Some(strategy),
                    epsilon: Some(value),
                    certificate: None,
                    charged_set: None,
                    note: FINITE_COLLAPSE,
                })
            } else {
                let mut none = ArbitrageFinding::none(kind, dual);
                none.note = FINITE_COLLAPSE;
                Ok(none)
            }
        }
        _ => Err(Error::InvariantBreach(
            "boxed uniform-gain program has an optimum".into(),
        )),
    }
}

/// Semi-static strategy with payoff `> 0` on every scenario of `Ω`.
pub fn detect_strong(market: &MarketModel, filtration: &FiltrationPartition) -> Result<ArbitrageFinding> {
    max_uniform_gain(market, filtration, ArbitrageKind::Strong)
}

/// Semi-static strategy with payoff `≥ ε > 0` on `Ω`; `ε` is the largest
/// bound reachable with strategy coordinates in `[-1, 1]`.
pub fn detect_uniformly_strong(market: &MarketModel, filtration: &FiltrationPartition) -> Result<ArbitrageFinding> {
    max_uniform_gain(market, filtration, ArbitrageKind::UniformlyStrong)
}

/// Semi-static strategy with payoff `≥ 0` on `Ω` and `≥ 1` on some member of
/// `family`. Members are tried in order.
pub fn detect_class_s(
    market: &MarketModel,
    filtration: &FiltrationPartition,
    family: &[ScenarioSet],
) -> Result<ArbitrageFinding> {
    check_filtration(market, filtration)?;
    if family.iter().any(BTreeSet::is_empty) {
        return Err(Error::Precondition("the family contains the empty set".into()));
    }
    let vars = vars_for(market, filtration, 0);
    let mut last_dual = Vec::new();
    for a in family {
        let mut lp = LinearProgram::new(Sense::Max, vec![Rational::zero(); vars.end()]);
        vars.set_free(&mut lp);
        for &w in market.omega() {
            let rhs = if a.contains(&w) {
                Rational::one()
            } else {
                Rational::zero()
            };
            lp.add_sparse(&vars.payoff_terms(market, w), Relation::Ge, rhs);
        }
        for &w in a.difference(market.omega()) {
            lp.add_sparse(&vars.payoff_terms(market, w), Relation::Ge, Rational::one());
        }
        match lp_solve(&lp)? {
            LpOutcome::Optimal { primal, .. } => {
                let strategy = vars.strategy(market, &primal);
                return Ok(ArbitrageFinding {
                    kind: ArbitrageKind::ClassS,
                    witness_set: positive_set(market, &strategy),
                    strategy: Some(strategy),
                    epsilon: None,
                    certificate: None,
                    charged_set: Some(a.clone()),
                    note: "",
                });
            }
            LpOutcome::Infeasible { farkas } => last_dual = farkas,
            LpOutcome::Unbounded { .. } => {
                return Err(Error::InvariantBreach(
                    "feasibility program has a zero objective".into(),
                ))
            }
        }
    }
    Ok(ArbitrageFinding::none(ArbitrageKind::ClassS, last_dual))
}

/// Conditional support of `ΔS_t` given the natural atom at `t - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionalSupport {
    /// Members of the atom.
    pub atom: Vec<usize>,
    /// Distinct increments of the charged members, or `None` when the atom
    /// has zero mass and the support is unconstrained.
    pub points: Option<Vec<Vec<Rational>>>,
}

pub fn conditional_support(market: &MarketModel, p: &FiniteMeasure, t: usize) -> Result<Vec<ConditionalSupport>> {
    if t < 1 || t > market.horizon() {
        return Err(Error::Precondition(format!(
            "time {t} outside 1..={}",
            market.horizon()
        )));
    }
    if p.weights().len() != market.num_scenarios() {
        return Err(Error::Dimension("measure does not match the market".into()));
    }
    Ok(market
        .natural_filtration()
        .atoms(t - 1)
        .iter()
        .map(|atom| {
            let charged: Vec<usize> = atom.iter().copied().filter(|&w| p.weight(w).is_positive()).collect();
            let points = (!charged.is_empty()).then(|| {
                let set: BTreeSet<Vec<Rational>> = charged.iter().map(|&w| market.delta_s(w, t)).collect();
                set.into_iter().collect()
            });
            ConditionalSupport {
                atom: atom.clone(),
                points,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DmwReport {
    #[serde(skip)]
    pub p: FiniteMeasure,
    pub u: ScenarioSet,
    pub u_star: ScenarioSet,
    pub omega_p: ScenarioSet,
    pub omega_p_star: ScenarioSet,
    /// No classical arbitrage under `P` in the natural filtration.
    pub no_classical_arbitrage: bool,
    /// `P((Ω^P)*) = 1`.
    pub full_efficient_mass: bool,
    /// Some martingale measure is equivalent to `P`.
    pub equivalent_martingale_measure: bool,
    pub agree: bool,
    /// No strong arbitrage on `Ω^P` in the scheme's aggregating filtration.
    pub no_strong_arbitrage_on_omega_p: bool,
    /// Some martingale measure is absolutely continuous with respect to `P`.
    pub absolutely_continuous_measure: bool,
    pub agree_absolutely_continuous: bool,
}

/// Strategy in the natural filtration with payoff `≥ 0` on `supp(P)` and
/// `> 0` on some scenario of `supp(P)`.
pub fn has_classical_arbitrage(market: &MarketModel, p: &FiniteMeasure) -> Result<bool> {
    let support = p.support();
    let plain = market.without_options().with_omega(support)?;
    Ok(detect_one_point(&plain, plain.natural_filtration())?.found())
}

/// Classical no-arbitrage under `P` through the scenario set `Ω^P`; options
/// are ignored and `Ω` plays no role.
pub fn dmw_analysis(market: &MarketModel, p: &FiniteMeasure) -> Result<DmwReport> {
    if p.weights().len() != market.num_scenarios() {
        return Err(Error::Dimension("measure does not match the market".into()));
    }
    let plain = market.without_options();
    let mut u: ScenarioSet = (0..market.num_scenarios()).collect();
    for t in 1..=market.horizon() {
        for cs in conditional_support(&plain, p, t)? {
            for &w in &cs.atom {
                let inside = cs.points.as_ref().is_some_and(|pts| pts.contains(&plain.delta_s(w, t)));
                if !inside {
                    u.remove(&w);
                }
            }
        }
    }
    let u_star = efficient_scenarios_on(&plain, &u)?.efficient;
    let omega_p: ScenarioSet = if p.mass(&u_star).is_positive() {
        u.clone()
    } else {
        u.difference(&u_star).copied().collect()
    };
    let omega_p_star = efficient_scenarios_on(&plain, &omega_p)?.efficient;

    let support = p.support();
    let no_classical_arbitrage = !has_classical_arbitrage(&plain, p)?;
    let full_efficient_mass = p.mass(&omega_p_star) == Rational::one();

    // max δ  s.t.  Q martingale on supp(P),  Q(ω) ≥ δ on supp(P).
    let mut m = measure_lp(&plain, &support, 1, Sense::Max);
    let delta = m.scenarios.len();
    m.lp.objective[delta] = Rational::one();
    for i in 0..delta {
        m.lp.add_sparse(
            &[(i, Rational::one()), (delta, -Rational::one())],
            Relation::Ge,
            Rational::zero(),
        );
    }
    let equivalent_martingale_measure = match lp_solve(&m.lp)? {
        LpOutcome::Optimal { value, .. } => value.is_positive(),
        LpOutcome::Infeasible { .. } => false,
        LpOutcome::Unbounded { .. } => return Err(Error::InvariantBreach("weights are bounded by one".into())),
    };
    let agree = no_classical_arbitrage == full_efficient_mass && full_efficient_mass == equivalent_martingale_measure;

    let no_strong_arbitrage_on_omega_p = if omega_p.is_empty() {
        false
    } else {
        let restricted = plain.with_omega(omega_p.clone())?;
        let scheme = run_partition_scheme(&restricted)?;
        !detect_strong(&restricted, &scheme.filtration)?.found()
    };
    let absolutely_continuous_measure = CalibratedMeasureProblem::new(&plain, MeasureObjective::Feasibility)
        .on(support)
        .solve()?
        .is_some();

    Ok(DmwReport {
        p: p.clone(),
        u,
        u_star,
        omega_p,
        omega_p_star,
        no_classical_arbitrage,
        full_efficient_mass,
        equivalent_martingale_measure,
        agree,
        agree_absolutely_continuous: no_strong_arbitrage_on_omega_p == absolutely_continuous_measure,
        no_strong_arbitrage_on_omega_p,
        absolutely_continuous_measure,
    })
}
