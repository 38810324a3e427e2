//! Superhedging prices, the dual value over calibrated martingale measures,
//! duality reports and the variational identity for adding one option.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lp::{lp_solve, LinearProgram, LpOutcome, Relation, Sense};
use crate::measures::{efficient_set_oracle, measure_from_primal, measure_lp};
use crate::model::{strategy_payoff, FiniteMeasure, MarketModel, ScenarioSet, Strategy};
use crate::rational::Rational;
use crate::semistatic::StrategyVars;

/// A rational number or `-∞`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExtendedValue {
    NegInf,
    Finite(Rational),
}

impl ExtendedValue {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtendedValue::Finite(v) => Some(v),
            ExtendedValue::NegInf => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedValue::Finite(_))
    }
}

impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedValue::NegInf => f.write_str("-inf"),
            ExtendedValue::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for ExtendedValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Outcome of [`superhedge`]: the price and, when it is finite, a strategy
/// `(x, α, H)` attaining it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Superhedge {
    pub value: ExtendedValue,
    pub strategy: Option<Strategy>,
}

fn check_payoff(market: &MarketModel, g: &[Rational]) -> Result<()> {
    if g.len() != market.num_scenarios() {
        return Err(Error::Dimension(format!(
            "payoff has {} entries for {} scenarios",
            g.len(),
            market.num_scenarios()
        )));
    }
    Ok(())
}

/// `inf { x : x + α·Φ + (H∘S)_T ≥ g on a }` over static `α` and
/// natural-predictable `H`. Column 0 of the program is `x`; `extra_option`
/// adds one more free static position `l` on that payoff (column 1).
fn superhedge_lp(
    market: &MarketModel,
    a: &ScenarioSet,
    g: &[Rational],
    extra_option: Option<&[Rational]>,
) -> (LinearProgram, StrategyVars) {
    let first = if extra_option.is_some() { 2 } else { 1 };
    let vars = StrategyVars::new(market, market.natural_filtration().clone(), first, false);
    let mut c = vec![Rational::zero(); vars.end()];
    c[0] = Rational::one();
    let mut lp = LinearProgram::new(Sense::Min, c);
    for j in 0..first {
        lp.set_free(j);
    }
    vars.set_free(&mut lp);
    for &w in a {
        let mut terms = vec![(0, Rational::one())];
        if let Some(phi) = extra_option {
            if !phi[w].is_zero() {
                terms.push((1, phi[w].clone()));
            }
        }
        terms.extend(vars.payoff_terms(market, w));
        lp.add_sparse(&terms, Relation::Ge, g[w].clone());
    }
    (lp, vars)
}

/// Superhedging price of `g` on `a` with the market's options. The returned
/// strategy carries `α` and `H`; its initial capital is the value.
pub fn superhedge(market: &MarketModel, a: &ScenarioSet, g: &[Rational]) -> Result<Superhedge> {
    check_payoff(market, g)?;
    if a.is_empty() {
        return Ok(Superhedge {
            value: ExtendedValue::NegInf,
            strategy: None,
        });
    }
    let (lp, vars) = superhedge_lp(market, a, g, None);
    match lp_solve(&lp)? {
        LpOutcome::Optimal { value, primal, .. } => Ok(Superhedge {
            value: ExtendedValue::Finite(value),
            strategy: Some(vars.strategy(market, &primal)),
        }),
        LpOutcome::Unbounded { .. } => Ok(Superhedge {
            value: ExtendedValue::NegInf,
            strategy: None,
        }),
        LpOutcome::Infeasible { .. } => Err(Error::InvariantBreach(
            "a superhedge with large enough capital always exists".into(),
        )),
    }
}

/// True iff `x + α·Φ + (H∘S)_T ≥ g` on every scenario of `a`.
pub fn superhedges(market: &MarketModel, strategy: &Strategy, x: &Rational, a: &ScenarioSet, g: &[Rational]) -> bool {
    a.iter().all(|&w| x + strategy_payoff(market, strategy, w) >= g[w])
}

/// `sup E_Q[g]` over calibrated martingale measures on `Ω`, with a maximiser.
pub fn dual_value_with_measure(market: &MarketModel, g: &[Rational]) -> Result<(ExtendedValue, Option<FiniteMeasure>)> {
    check_payoff(market, g)?;
    let support = market.omega().clone();
    let mut m = measure_lp(market, &support, 0, Sense::Max);
    m.lp.objective = m.scenarios.iter().map(|&w| g[w].clone()).collect();
    match lp_solve(&m.lp)? {
        LpOutcome::Optimal { value, primal, .. } => Ok((
            ExtendedValue::Finite(value),
            Some(measure_from_primal(market, &m.scenarios, &primal)),
        )),
        LpOutcome::Infeasible { .. } => Ok((ExtendedValue::NegInf, None)),
        LpOutcome::Unbounded { .. } => Err(Error::InvariantBreach("the measure polytope is bounded".into())),
    }
}

pub fn dual_value(market: &MarketModel, g: &[Rational]) -> Result<ExtendedValue> {
    Ok(dual_value_with_measure(market, g)?.0)
}

/// Difference between a superhedging price and the dual value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Gap {
    Finite(Rational),
    /// Finite price against an empty measure set.
    Infinite,
    BothNegInf,
    /// `-∞` price against a nonempty measure set; never happens when weak
    /// duality holds.
    NegInfinite,
}

fn gap(primal: &ExtendedValue, dual: &ExtendedValue) -> Gap {
    match (primal, dual) {
        (ExtendedValue::Finite(p), ExtendedValue::Finite(d)) => Gap::Finite(p - d),
        (ExtendedValue::Finite(_), ExtendedValue::NegInf) => Gap::Infinite,
        (ExtendedValue::NegInf, ExtendedValue::NegInf) => Gap::BothNegInf,
        (ExtendedValue::NegInf, ExtendedValue::Finite(_)) => Gap::NegInfinite,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualityReport {
    /// `Ω*_Φ`.
    pub hedge_set: ScenarioSet,
    pub primal: ExtendedValue,
    pub strategy: Option<Strategy>,
    pub dual: ExtendedValue,
    pub dual_measure: Option<FiniteMeasure>,
    pub gap: Gap,
    /// Superhedging price on all of `Ω` and its gap to the dual value.
    pub omega_primal: ExtendedValue,
    pub omega_gap: Gap,
}

impl DualityReport {
    /// Duality holds on `Ω*_Φ`: equal finite values or both `-∞`.
    pub fn holds(&self) -> bool {
        match &self.gap {
            Gap::Finite(v) => v.is_zero(),
            Gap::BothNegInf => true,
            Gap::Infinite | Gap::NegInfinite => false,
        }
    }
}

/// Superhedging price on `Ω*_Φ`, the dual value, their gap, and the price on
/// `Ω` for comparison.
pub fn duality_report(market: &MarketModel, g: &[Rational]) -> Result<DualityReport> {
    check_payoff(market, g)?;
    let hedge_set = efficient_set_oracle(market)?;
    let on_efficient = superhedge(market, &hedge_set, g)?;
    let on_omega = superhedge(market, market.omega(), g)?;
    let (dual, dual_measure) = dual_value_with_measure(market, g)?;
    if let (Some(s), Some(x)) = (&on_efficient.strategy, on_efficient.value.finite()) {
        if !superhedges(market, s, x, &hedge_set, g) {
            return Err(Error::InvariantBreach("optimal superhedge fails pointwise".into()));
        }
    }
    Ok(DualityReport {
        gap: gap(&on_efficient.value, &dual),
        omega_gap: gap(&on_omega.value, &dual),
        hedge_set,
        primal: on_efficient.value,
        strategy: on_efficient.strategy,
        dual,
        dual_measure,
        omega_primal: on_omega.value,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariationalCheck {
    pub lhs: ExtendedValue,
    pub rhs: ExtendedValue,
    pub equal: bool,
}

/// Compares the price of `g` on `Ω*_Φ` with options `φ_1..φ_{n+1}` against
/// `inf_l` of the price of `g - l φ_{n+1}` with options `φ_1..φ_n`, the
/// infimum over `l` being a free column of the same program.
pub fn variational_identity_check(market: &MarketModel, g: &[Rational], n: usize) -> Result<VariationalCheck> {
    check_payoff(market, g)?;
    let k = market.num_options();
    if n >= k {
        return Err(Error::Precondition(format!("need n < k, got n = {n} and k = {k}")));
    }
    let efficient = efficient_set_oracle(market)?;
    let prefix: Vec<usize> = (0..=n).collect();
    let lhs = superhedge(&market.with_options(&prefix)?, &efficient, g)?.value;
    let rhs = if efficient.is_empty() {
        ExtendedValue::NegInf
    } else {
        let base = market.with_options(&prefix[..n])?;
        let phi = &market.options()[n].payoff;
        let (lp, _) = superhedge_lp(&base, &efficient, g, Some(phi));
        match lp_solve(&lp)? {
            LpOutcome::Optimal { value, .. } => ExtendedValue::Finite(value),
            LpOutcome::Unbounded { .. } => ExtendedValue::NegInf,
            LpOutcome::Infeasible { .. } => {
                return Err(Error::InvariantBreach("superhedging program is feasible".into()))
            }
        }
    };
    Ok(VariationalCheck {
        equal: lhs == rhs,
        lhs,
        rhs,
    })
}
