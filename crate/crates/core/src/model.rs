//! Market data model: scenarios, filtrations as atom partitions, semi-static
//! strategies and finitely supported measures.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{dot, Rational};

/// A set of scenarios, stored as indices into [`MarketModel::scenarios`].
pub type ScenarioSet = BTreeSet<usize>;

/// One element of the finite scenario space: a joint trajectory of prices
/// and factors. `prices[t][j]` is asset `j` at time `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub id: String,
    pub prices: Vec<Vec<Rational>>,
    pub factors: Vec<Vec<Rational>>,
}

/// A statically traded option, quoted net of its initial cost so that it has
/// zero price.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptionPayoff {
    pub name: String,
    /// One entry per scenario, in scenario order.
    pub payoff: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarketModel {
    horizon: usize,
    num_assets: usize,
    num_factors: usize,
    scenarios: Arc<[Scenario]>,
    omega: ScenarioSet,
    options: Vec<OptionPayoff>,
    natural: Arc<FiltrationPartition>,
}

impl MarketModel {
    /// Builds and validates a market. `omega = None` admits every scenario.
    pub fn new(
        horizon: usize,
        num_assets: usize,
        num_factors: usize,
        scenarios: Vec<Scenario>,
        omega: Option<ScenarioSet>,
        options: Vec<OptionPayoff>,
    ) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::Validation("horizon T must be at least 1".into()));
        }
        if num_assets < 1 {
            return Err(Error::Validation("number of assets d must be at least 1".into()));
        }
        if scenarios.is_empty() {
            return Err(Error::Validation("scenario list is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for sc in &scenarios {
            if !seen.insert(sc.id.as_str()) {
                return Err(Error::Validation(format!("duplicate scenario id {:?}", sc.id)));
            }
            if sc.prices.len() != horizon + 1 {
                return Err(Error::Validation(format!(
                    "scenario {:?}: S has {} time rows, expected T+1 = {}",
                    sc.id,
                    sc.prices.len(),
                    horizon + 1
                )));
            }
            if let Some(row) = sc.prices.iter().position(|r| r.len() != num_assets) {
                return Err(Error::Validation(format!(
                    "scenario {:?}: S at time {row} does not have d = {num_assets} entries",
                    sc.id
                )));
            }
            if sc.factors.len() != horizon + 1 {
                return Err(Error::Validation(format!(
                    "scenario {:?}: Y has {} time rows, expected T+1 = {}",
                    sc.id,
                    sc.factors.len(),
                    horizon + 1
                )));
            }
            if let Some(row) = sc.factors.iter().position(|r| r.len() != num_factors) {
                return Err(Error::Validation(format!(
                    "scenario {:?}: Y at time {row} does not have {num_factors} entries",
                    sc.id
                )));
            }
        }
        if scenarios.iter().any(|sc| sc.factors[0] != scenarios[0].factors[0]) {
            return Err(Error::Validation("Y0 is not constant across scenarios".into()));
        }
        let omega = omega.unwrap_or_else(|| (0..scenarios.len()).collect());
        if omega.is_empty() {
            return Err(Error::Validation("empty Ω".into()));
        }
        if let Some(bad) = omega.iter().find(|&&i| i >= scenarios.len()) {
            return Err(Error::Validation(format!("Ω refers to unknown scenario index {bad}")));
        }
        for opt in &options {
            if opt.payoff.len() != scenarios.len() {
                return Err(Error::Validation(format!(
                    "option {:?} has {} payoff entries for {} scenarios",
                    opt.name,
                    opt.payoff.len(),
                    scenarios.len()
                )));
            }
        }
        let scenarios: Arc<[Scenario]> = scenarios.into();
        let natural = Arc::new(natural_filtration(&scenarios, horizon));
        Ok(MarketModel {
            horizon,
            num_assets,
            num_factors,
            scenarios,
            omega,
            options,
            natural,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_assets(&self) -> usize {
        self.num_assets
    }

    pub fn num_factors(&self) -> usize {
        self.num_factors
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn num_options(&self) -> usize {
        self.options.len()
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn scenario_id(&self, w: usize) -> &str {
        &self.scenarios[w].id
    }

    pub fn scenario_index(&self, id: &str) -> Option<usize> {
        self.scenarios.iter().position(|s| s.id == id)
    }

    pub fn omega(&self) -> &ScenarioSet {
        &self.omega
    }

    pub fn all_scenarios(&self) -> ScenarioSet {
        (0..self.scenarios.len()).collect()
    }

    pub fn options(&self) -> &[OptionPayoff] {
        &self.options
    }

    /// Price vector `S_t(w)`.
    pub fn price(&self, w: usize, t: usize) -> &[Rational] {
        &self.scenarios[w].prices[t]
    }

    /// Increment `S_t(w) - S_{t-1}(w)` for `1 <= t <= T`.
    pub fn delta_s(&self, w: usize, t: usize) -> Vec<Rational> {
        let now = &self.scenarios[w].prices[t];
        let before = &self.scenarios[w].prices[t - 1];
        now.iter().zip(before).map(|(a, b)| a - b).collect()
    }

    /// Option payoff vector `Φ(w)`, one entry per option.
    pub fn option_values(&self, w: usize) -> Vec<Rational> {
        self.options.iter().map(|o| o.payoff[w].clone()).collect()
    }

    /// The natural filtration generated by `S` and `Y`.
    pub fn natural_filtration(&self) -> &Arc<FiltrationPartition> {
        &self.natural
    }

    /// Same scenarios and options with a different admissible set.
    pub fn with_omega(&self, omega: ScenarioSet) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::Validation("empty Ω".into()));
        }
        if omega.iter().any(|&i| i >= self.scenarios.len()) {
            return Err(Error::Validation("Ω must be a subset of the scenarios".into()));
        }
        Ok(MarketModel { omega, ..self.clone() })
    }

    /// Keeps only the options at `indices`, in the given order.
    pub fn with_options(&self, indices: &[usize]) -> Result<Self> {
        let mut options = Vec::with_capacity(indices.len());
        for &i in indices {
            let opt = self
                .options
                .get(i)
                .ok_or_else(|| Error::Precondition(format!("option index {i} out of range")))?;
            options.push(opt.clone());
        }
        Ok(MarketModel {
            options,
            ..self.clone()
        })
    }

    /// Replaces the option list.
    pub fn with_option_payoffs(&self, options: Vec<OptionPayoff>) -> Result<Self> {
        if let Some(o) = options.iter().find(|o| o.payoff.len() != self.scenarios.len()) {
            return Err(Error::Validation(format!(
                "option {:?} does not cover every scenario",
                o.name
            )));
        }
        Ok(MarketModel {
            options,
            ..self.clone()
        })
    }

    pub fn without_options(&self) -> Self {
        MarketModel {
            options: Vec::new(),
            ..self.clone()
        }
    }

    /// Resolves a comma-separated list of option names to indices.
    pub fn option_indices(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.options
                    .iter()
                    .position(|o| o.name == *n)
                    .ok_or_else(|| Error::Validation(format!("unknown option {n:?}")))
            })
            .collect()
    }

    pub fn ids(&self, set: &ScenarioSet) -> Vec<String> {
        set.iter().map(|&w| self.scenarios[w].id.clone()).collect()
    }
}

fn natural_filtration(scenarios: &[Scenario], horizon: usize) -> FiltrationPartition {
    let n = scenarios.len();
    let mut atoms = Vec::with_capacity(horizon + 1);
    let mut previous: Vec<Vec<usize>> = vec![(0..n).collect()];
    for t in 0..=horizon {
        let mut next = Vec::new();
        for atom in &previous {
            let mut groups: BTreeMap<(&[Rational], &[Rational]), Vec<usize>> = BTreeMap::new();
            for &w in atom {
                let key = (&scenarios[w].prices[t][..], &scenarios[w].factors[t][..]);
                groups.entry(key).or_default().push(w);
            }
            next.extend(groups.into_values());
        }
        atoms.push(next.clone());
        previous = next;
    }
    FiltrationPartition::from_atoms_unchecked(FiltrationLabel::Natural, n, atoms)
}

/// Atoms of the natural filtration at time `t`: scenarios share an atom iff
/// their price and factor paths agree up to `t`.
pub fn level_set_partition(market: &MarketModel, t: usize) -> Result<Vec<Vec<usize>>> {
    if t > market.horizon() {
        return Err(Error::Precondition(format!(
            "time {t} outside 0..={}",
            market.horizon()
        )));
    }
    Ok(market.natural_filtration().atoms(t).to_vec())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FiltrationLabel {
    /// Generated by the price and factor paths.
    Natural,
    /// Enlarged by arbitrage aggregators.
    Enlarged,
    /// Augmented by the polar sets of the calibrated measures.
    Completed,
    Other(String),
}

/// A filtration on a finite scenario space, stored as one partition of the
/// full scenario set per time `0..=T`. Atoms are sorted and listed in order of
/// their smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiltrationPartition {
    label: FiltrationLabel,
    atoms: Vec<Vec<Vec<usize>>>,
    atom_of: Vec<Vec<usize>>,
}

impl FiltrationPartition {
    /// Builds a filtration from per-time partitions, checking that each is a
    /// partition of `0..num_scenarios` and that they refine over time.
    pub fn from_atoms(label: FiltrationLabel, num_scenarios: usize, atoms: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        for (t, level) in atoms.iter().enumerate() {
            let mut seen = vec![false; num_scenarios];
            for atom in level {
                if atom.is_empty() {
                    return Err(Error::Validation(format!("empty atom at time {t}")));
                }
                for &w in atom {
                    if w >= num_scenarios || seen[w] {
                        return Err(Error::Validation(format!(
                            "atoms at time {t} are not a partition of the scenario set"
                        )));
                    }
                    seen[w] = true;
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::Validation(format!(
                    "atoms at time {t} do not cover the scenario set"
                )));
            }
        }
        let f = Self::from_atoms_unchecked(label, num_scenarios, atoms);
        if !f.is_filtration() {
            return Err(Error::Validation("partitions do not refine over time".into()));
        }
        Ok(f)
    }

    fn from_atoms_unchecked(label: FiltrationLabel, num_scenarios: usize, atoms: Vec<Vec<Vec<usize>>>) -> Self {
        let atoms: Vec<Vec<Vec<usize>>> = atoms
            .into_iter()
            .map(|mut level| {
                for atom in &mut level {
                    atom.sort_unstable();
                }
                level.sort_unstable_by_key(|a| a[0]);
                level
            })
            .collect();
        let atom_of = atoms
            .iter()
            .map(|level| {
                let mut map = vec![0; num_scenarios];
                for (a, atom) in level.iter().enumerate() {
                    for &w in atom {
                        map[w] = a;
                    }
                }
                map
            })
            .collect();
        FiltrationPartition { label, atoms, atom_of }
    }

    /// The finest filtration: every scenario is its own atom at every time.
    pub fn discrete(label: FiltrationLabel, num_scenarios: usize, horizon: usize) -> Self {
        let level: Vec<Vec<usize>> = (0..num_scenarios).map(|w| vec![w]).collect();
        Self::from_atoms_unchecked(label, num_scenarios, vec![level; horizon + 1])
    }

    pub fn label(&self) -> &FiltrationLabel {
        &self.label
    }

    pub fn with_label(mut self, label: FiltrationLabel) -> Self {
        self.label = label;
        self
    }

    pub fn horizon(&self) -> usize {
        self.atoms.len() - 1
    }

    pub fn num_scenarios(&self) -> usize {
        self.atom_of[0].len()
    }

    pub fn atoms(&self, t: usize) -> &[Vec<usize>] {
        &self.atoms[t]
    }

    pub fn atom_of(&self, t: usize, w: usize) -> usize {
        self.atom_of[t][w]
    }

    /// Atoms at time `t+1` refine atoms at time `t` for every `t`.
    pub fn is_filtration(&self) -> bool {
        (1..self.atoms.len()).all(|t| {
            self.atoms[t].iter().all(|atom| {
                atom.iter()
                    .all(|&w| self.atom_of[t - 1][w] == self.atom_of[t - 1][atom[0]])
            })
        })
    }

    /// True iff every atom of `self` lies inside an atom of `coarser`, at
    /// every time.
    pub fn refines(&self, coarser: &FiltrationPartition) -> bool {
        self.atoms.len() == coarser.atoms.len()
            && self.num_scenarios() == coarser.num_scenarios()
            && (0..self.atoms.len()).all(|t| {
                self.atoms[t].iter().all(|atom| {
                    atom.iter()
                        .all(|&w| coarser.atom_of[t][w] == coarser.atom_of[t][atom[0]])
                })
            })
    }

    /// Splits atoms by the joint level sets of `marks`; a mark only affects
    /// times `t >= mark.enters_at`.
    pub fn refine(&self, marks: &[Mark], label: FiltrationLabel) -> FiltrationPartition {
        let n = self.num_scenarios();
        let atoms = (0..self.atoms.len())
            .map(|t| {
                let active: Vec<&Mark> = marks.iter().filter(|m| m.enters_at <= t).collect();
                if active.is_empty() {
                    return self.atoms[t].clone();
                }
                let mut groups: BTreeMap<(usize, Vec<&[Rational]>), Vec<usize>> = BTreeMap::new();
                for w in 0..n {
                    let key: Vec<&[Rational]> = active.iter().map(|m| &m.labels[w][..]).collect();
                    groups.entry((self.atom_of[t][w], key)).or_default().push(w);
                }
                groups.into_values().collect()
            })
            .collect();
        Self::from_atoms_unchecked(label, n, atoms)
    }
}

/// A scenario function used to enlarge a filtration. It becomes known at
/// time `enters_at` and stays known afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mark {
    pub enters_at: usize,
    /// One label per scenario; scenarios are separated iff labels differ.
    pub labels: Vec<Vec<Rational>>,
}

impl Mark {
    /// Membership indicator of `set`, known from time 0.
    pub fn set(set: &ScenarioSet, num_scenarios: usize) -> Mark {
        let labels = (0..num_scenarios)
            .map(|w| {
                vec![if set.contains(&w) {
                    Rational::one()
                } else {
                    Rational::zero()
                }]
            })
            .collect();
        Mark { enters_at: 0, labels }
    }

    /// The time-`u` component of a trading process. Following the
    /// aggregating-filtration convention it enters one period early, at
    /// `u - 1`.
    pub fn process_component(u: usize, values: Vec<Vec<Rational>>) -> Mark {
        Mark {
            enters_at: u.saturating_sub(1),
            labels: values,
        }
    }
}

/// `refine_partition`: enlarges `base` by `marks`.
pub fn refine_partition(base: &FiltrationPartition, marks: &[Mark], label: FiltrationLabel) -> FiltrationPartition {
    base.refine(marks, label)
}

/// A semi-static strategy: option positions `α` (known at time 0) and stock
/// holdings `H_t` for `t = 1..=T`, stored per scenario. Predictability with
/// respect to a filtration is checked by [`is_predictable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    /// `alpha[w][j]`: position in option `j` on scenario `w`.
    pub alpha: Vec<Vec<Rational>>,
    /// `holdings[t - 1][w][i]`: units of asset `i` held over `(t-1, t]`.
    pub holdings: Vec<Vec<Vec<Rational>>>,
    /// The filtration the strategy was constructed against.
    pub filtration: Arc<FiltrationPartition>,
}

impl Strategy {
    pub fn zero(market: &MarketModel, filtration: Arc<FiltrationPartition>) -> Strategy {
        let n = market.num_scenarios();
        Strategy {
            alpha: vec![vec![Rational::zero(); market.num_options()]; n],
            holdings: vec![vec![vec![Rational::zero(); market.num_assets()]; n]; market.horizon()],
            filtration,
        }
    }

    /// Scenario-independent option positions.
    pub fn set_static_alpha(&mut self, alpha: &[Rational]) {
        for a in &mut self.alpha {
            a.clone_from_slice(alpha);
        }
    }

    /// Sets `H_t` on every scenario of `members` to `h`.
    pub fn set_holding(&mut self, t: usize, members: &[usize], h: &[Rational]) {
        for &w in members {
            self.holdings[t - 1][w].clone_from_slice(h);
        }
    }

    pub fn holding(&self, t: usize, w: usize) -> &[Rational] {
        &self.holdings[t - 1][w]
    }

    /// `a * self + b * other`, keeping `self`'s filtration.
    pub fn linear_combination(&self, a: &Rational, other: &Strategy, b: &Rational) -> Strategy {
        let comb =
            |x: &[Rational], y: &[Rational]| -> Vec<Rational> { x.iter().zip(y).map(|(u, v)| a * u + b * v).collect() };
        Strategy {
            alpha: self.alpha.iter().zip(&other.alpha).map(|(x, y)| comb(x, y)).collect(),
            holdings: self
                .holdings
                .iter()
                .zip(&other.holdings)
                .map(|(hx, hy)| hx.iter().zip(hy).map(|(x, y)| comb(x, y)).collect())
                .collect(),
            filtration: self.filtration.clone(),
        }
    }

    /// Payoffs on every scenario.
    pub fn payoffs(&self, market: &MarketModel) -> Vec<Rational> {
        (0..market.num_scenarios())
            .map(|w| strategy_payoff(market, self, w))
            .collect()
    }

    /// Compact per-atom view for reports.
    pub fn summary(&self, market: &MarketModel) -> StrategySummary {
        let f = &self.filtration;
        let alpha = f
            .atoms(0)
            .iter()
            .map(|atom| AtomValue {
                atom: atom.iter().map(|&w| market.scenario_id(w).to_string()).collect(),
                value: self.alpha[atom[0]].clone(),
            })
            .collect();
        let holdings = (1..=market.horizon())
            .map(|t| {
                f.atoms(t - 1)
                    .iter()
                    .map(|atom| AtomValue {
                        atom: atom.iter().map(|&w| market.scenario_id(w).to_string()).collect(),
                        value: self.holdings[t - 1][atom[0]].clone(),
                    })
                    .collect()
            })
            .collect();
        StrategySummary { alpha, holdings }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AtomValue {
    pub atom: Vec<String>,
    pub value: Vec<Rational>,
}

/// Strategy values listed once per atom of its filtration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrategySummary {
    pub alpha: Vec<AtomValue>,
    /// `holdings[t-1]` lists `H_t` per atom at time `t-1`.
    pub holdings: Vec<Vec<AtomValue>>,
}

/// `α·Φ(w) + Σ_t H_t(w)·ΔS_t(w)`.
pub fn strategy_payoff(market: &MarketModel, strategy: &Strategy, w: usize) -> Rational {
    let mut total = dot(&strategy.alpha[w], &market.option_values(w));
    for t in 1..=market.horizon() {
        total += dot(strategy.holding(t, w), &market.delta_s(w, t));
    }
    total
}

/// True iff `α` is constant on atoms at time 0 and each `H_t` is constant on
/// atoms at time `t-1` of `filtration`.
pub fn is_predictable(market: &MarketModel, strategy: &Strategy, filtration: &FiltrationPartition) -> bool {
    let alpha_ok = filtration
        .atoms(0)
        .iter()
        .all(|atom| atom.iter().all(|&w| strategy.alpha[w] == strategy.alpha[atom[0]]));
    alpha_ok
        && (1..=market.horizon()).all(|t| {
            filtration.atoms(t - 1).iter().all(|atom| {
                atom.iter()
                    .all(|&w| strategy.holding(t, w) == strategy.holding(t, atom[0]))
            })
        })
}

/// A probability on the scenario space with rational weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMeasure {
    weights: Vec<Rational>,
}

impl FiniteMeasure {
    /// Checks nonnegativity and total mass one.
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| w.is_negative()) {
            return Err(Error::Validation(format!("negative weight {w}")));
        }
        let total: Rational = weights.iter().sum();
        if total != Rational::one() {
            return Err(Error::Validation(format!("weights sum to {total}, not 1")));
        }
        Ok(FiniteMeasure { weights })
    }

    pub fn dirac(num_scenarios: usize, w: usize) -> Self {
        let mut weights = vec![Rational::zero(); num_scenarios];
        weights[w] = Rational::one();
        FiniteMeasure { weights }
    }

    /// Uniform on `set`, which must be nonempty.
    pub fn uniform_on(num_scenarios: usize, set: &ScenarioSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Precondition("uniform measure on an empty set".into()));
        }
        let mass = Rational::new(1, set.len() as i64);
        let weights = (0..num_scenarios)
            .map(|w| {
                if set.contains(&w) {
                    mass.clone()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        Ok(FiniteMeasure { weights })
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, w: usize) -> &Rational {
        &self.weights[w]
    }

    pub fn support(&self) -> ScenarioSet {
        (0..self.weights.len())
            .filter(|&w| self.weights[w].is_positive())
            .collect()
    }

    pub fn mass(&self, set: &ScenarioSet) -> Rational {
        set.iter().map(|&w| &self.weights[w]).sum()
    }

    pub fn expectation(&self, g: &[Rational]) -> Rational {
        dot(&self.weights, g)
    }

    /// `λ·self + (1-λ)·other` for `0 <= λ <= 1`.
    pub fn mix(&self, lambda: &Rational, other: &FiniteMeasure) -> FiniteMeasure {
        let mu = Rational::one() - lambda;
        FiniteMeasure {
            weights: self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| lambda * a + &mu * b)
                .collect(),
        }
    }
}
