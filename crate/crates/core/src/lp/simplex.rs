//! Exact bounded-variable primal simplex on a compact tableau.
//!
//! Every row `a_i·x` gets a logical variable `r_i = a_i·x` whose bounds carry
//! the row relation, so the system is homogeneous and the tableau only stores
//! the nonbasic columns. Rows whose starting logical value is out of bounds
//! get one artificial variable each; phase 1 minimises their sum, and an
//! artificial that leaves the basis is frozen at zero for good.
//!
//! Pricing picks the largest reduced cost and switches to Bland's rule
//! (smallest index entering, smallest index leaving on ties) after a run of
//! degenerate pivots, so the method is deterministic and cannot cycle.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{dot, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// `optimize c·x` subject to rows and per-variable bounds. `None` bounds are
/// infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<Option<Rational>>,
    pub upper: Vec<Option<Rational>>,
}

impl LinearProgram {
    /// A program over nonnegative variables with no rows.
    pub fn new(sense: Sense, objective: Vec<Rational>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
            lower: vec![Some(Rational::zero()); n],
            upper: vec![None; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    /// Adds a row given as `(variable, coefficient)` pairs; repeated
    /// variables accumulate.
    pub fn add_sparse(&mut self, terms: &[(usize, Rational)], relation: Relation, rhs: Rational) {
        let mut coeffs = vec![Rational::zero(); self.num_vars()];
        for (j, c) in terms {
            coeffs[*j] += c;
        }
        self.add_constraint(coeffs, relation, rhs);
    }

    pub fn set_bounds(&mut self, j: usize, lower: Option<Rational>, upper: Option<Rational>) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn set_free(&mut self, j: usize) {
        self.set_bounds(j, None, None);
    }

    fn check_dimensions(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Dimension(format!(
                "{n} objective entries but {} lower and {} upper bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if let Some((i, c)) = self.constraints.iter().enumerate().find(|(_, c)| c.coeffs.len() != n) {
            return Err(Error::Dimension(format!(
                "row {i} has {} coefficients, objective has {n}",
                c.coeffs.len()
            )));
        }
        for j in 0..n {
            if let (Some(lo), Some(hi)) = (&self.lower[j], &self.upper[j]) {
                if lo > hi {
                    return Err(Error::Precondition(format!(
                        "variable {j} has lower bound {lo} above upper bound {hi}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Solver result with exact certificates.
///
/// Dual vectors follow the usual sign conventions of the stated sense: for a
/// maximisation `≤` rows carry `y ≥ 0` and `≥` rows `y ≤ 0`; for a
/// minimisation the signs are reversed. The Farkas vector always uses the
/// minimisation convention with a zero objective, and certifies
/// infeasibility through a strictly positive dual value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        value: Rational,
        primal: Vec<Rational>,
        dual: Vec<Rational>,
    },
    Infeasible {
        farkas: Vec<Rational>,
    },
    Unbounded {
        primal: Vec<Rational>,
        ray: Vec<Rational>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn status(&self) -> LpStatus {
        match self {
            LpOutcome::Optimal { .. } => LpStatus::Optimal,
            LpOutcome::Infeasible { .. } => LpStatus::Infeasible,
            LpOutcome::Unbounded { .. } => LpStatus::Unbounded,
        }
    }

    pub fn value(&self) -> Option<&Rational> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn primal(&self) -> Option<&[Rational]> {
        match self {
            LpOutcome::Optimal { primal, .. } | LpOutcome::Unbounded { primal, .. } => Some(primal),
            LpOutcome::Infeasible { .. } => None,
        }
    }
}

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

struct Tableau {
    /// `rows[i][k]`: coefficient of nonbasic column `k` in basic row `i`.
    rows: Vec<Vec<Rational>>,
    /// Variable id of each nonbasic column.
    cols: Vec<usize>,
    /// Variable id basic in each row.
    basic: Vec<usize>,
    /// Columns that may never enter again (frozen artificials).
    dead: Vec<bool>,
    lower: Vec<Option<Rational>>,
    upper: Vec<Option<Rational>>,
    value: Vec<Rational>,
    cost: Vec<Rational>,
    /// Reduced cost of each nonbasic column.
    reduced: Vec<Rational>,
    first_artificial: usize,
    bland: bool,
    streak: usize,
}

enum Step {
    Optimal,
    Unbounded { col: usize, dir: i32 },
    Moved,
}

impl Tableau {
    fn is_artificial(&self, v: usize) -> bool {
        v >= self.first_artificial
    }

    fn can_increase(&self, v: usize) -> bool {
        self.upper[v].as_ref().is_none_or(|hi| &self.value[v] < hi)
    }

    fn can_decrease(&self, v: usize) -> bool {
        self.lower[v].as_ref().is_none_or(|lo| &self.value[v] > lo)
    }

    fn price(&mut self) {
        self.reduced = (0..self.cols.len())
            .map(|k| {
                let mut d = self.cost[self.cols[k]].clone();
                for (i, row) in self.rows.iter().enumerate() {
                    let cb = &self.cost[self.basic[i]];
                    if !cb.is_zero() && !row[k].is_zero() {
                        d += cb * &row[k];
                    }
                }
                d
            })
            .collect();
    }

    fn objective(&self) -> Rational {
        self.value
            .iter()
            .zip(&self.cost)
            .filter(|(_, c)| !c.is_zero())
            .map(|(v, c)| v * c)
            .sum()
    }

    fn choose_entering(&self) -> Option<(usize, i32)> {
        let mut best: Option<(usize, i32)> = None;
        for k in 0..self.cols.len() {
            if self.dead[k] {
                continue;
            }
            let v = self.cols[k];
            let d = &self.reduced[k];
            let dir = if d.is_negative() && self.can_increase(v) {
                1
            } else if d.is_positive() && self.can_decrease(v) {
                -1
            } else {
                continue;
            };
            best = match best {
                None => Some((k, dir)),
                Some((b, bdir)) => {
                    let bv = self.cols[b];
                    let better = if self.bland {
                        v < bv
                    } else {
                        let (da, db) = (d.abs(), self.reduced[b].abs());
                        da > db || (da == db && v < bv)
                    };
                    if better {
                        Some((k, dir))
                    } else {
                        Some((b, bdir))
                    }
                }
            };
        }
        best
    }

    fn step(&mut self) -> Step {
        let Some((col, dir)) = self.choose_entering() else {
            return Step::Optimal;
        };
        let entering = self.cols[col];

        // Ratio test: (step length, leaving row) with ties to the smallest
        // basic variable id.
        let mut limit: Option<(Rational, usize)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let a = &row[col];
            if a.is_zero() {
                continue;
            }
            let b = self.basic[i];
            let moving_up = a.is_positive() == (dir > 0);
            let theta = if moving_up {
                match &self.upper[b] {
                    Some(hi) => (hi - &self.value[b]) / a.abs(),
                    None => continue,
                }
            } else {
                match &self.lower[b] {
                    Some(lo) => (&self.value[b] - lo) / a.abs(),
                    None => continue,
                }
            };
            let replace = match &limit {
                None => true,
                Some((best, bi)) => theta < *best || (theta == *best && b < self.basic[*bi]),
            };
            if replace {
                limit = Some((theta, i));
            }
        }
        let flip = match (&self.lower[entering], &self.upper[entering]) {
            (Some(lo), Some(hi)) => Some(hi - lo),
            _ => None,
        };

        let (theta, leaving_row) = match (limit, flip) {
            (None, None) => return Step::Unbounded { col, dir },
            (None, Some(f)) => (f, None),
            (Some((t, _)), Some(f)) if f <= t => (f, None),
            (Some((t, i)), _) => (t, Some(i)),
        };

        if theta.is_zero() {
            self.streak += 1;
            if self.streak >= DEGENERATE_STREAK {
                self.bland = true;
            }
        } else {
            self.streak = 0;
            let delta = if dir > 0 { theta.clone() } else { -&theta };
            self.value[entering] += &delta;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if !a.is_zero() {
                    let change = a * &delta;
                    self.value[self.basic[i]] += change;
                }
            }
        }

        if let Some(r) = leaving_row {
            self.pivot(r, col);
        }
        Step::Moved
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let leaving = self.basic[r];
        let entering = self.cols[col];
        // Snap the leaving variable to the bound it reached.
        let bound = [&self.lower[leaving], &self.upper[leaving]]
            .into_iter()
            .flatten()
            .find(|b| **b == self.value[leaving])
            .cloned();
        debug_assert!(bound.is_some(), "leaving variable not at a bound");
        if let Some(b) = bound {
            self.value[leaving] = b;
        }

        let p = self.rows[r][col].clone();
        let inv = p.recip();
        let mut new_row: Vec<Rational> = self.rows[r].iter().map(|a| -(a * &inv)).collect();
        new_row[col] = inv;

        let nz: Vec<usize> = (0..new_row.len()).filter(|&k| !new_row[k].is_zero()).collect();
        let apply = |row: &mut Vec<Rational>| {
            let f = std::mem::take(&mut row[col]);
            if f.is_zero() {
                return;
            }
            for &k in &nz {
                if k == col {
                    row[k] = &f * &new_row[k];
                } else {
                    row[k] += &f * &new_row[k];
                }
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                apply(row);
            }
        }
        apply(&mut self.reduced);
        self.rows[r] = new_row;
        self.basic[r] = entering;
        self.cols[col] = leaving;
        self.dead[col] = self.is_artificial(leaving);
    }

    fn run(&mut self) -> Step {
        self.bland = false;
        self.streak = 0;
        loop {
            match self.step() {
                Step::Moved => continue,
                other => return other,
            }
        }
    }

    /// Multiplier of row `i`: the reduced cost of its logical variable.
    fn row_duals(&self, n: usize, m: usize) -> Vec<Rational> {
        let mut y = vec![Rational::zero(); m];
        for (k, &v) in self.cols.iter().enumerate() {
            if (n..n + m).contains(&v) {
                y[v - n] = self.reduced[k].clone();
            }
        }
        y
    }
}

/// Solves `lp` exactly.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.check_dimensions()?;
    let n = lp.num_vars();
    let m = lp.constraints.len();

    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    let mut value: Vec<Rational> = (0..n)
        .map(|j| match (&lp.lower[j], &lp.upper[j]) {
            (Some(lo), _) => lo.clone(),
            (None, Some(hi)) => hi.clone(),
            (None, None) => Rational::zero(),
        })
        .collect();
    for c in &lp.constraints {
        let (lo, hi) = match c.relation {
            Relation::Le => (None, Some(c.rhs.clone())),
            Relation::Ge => (Some(c.rhs.clone()), None),
            Relation::Eq => (Some(c.rhs.clone()), Some(c.rhs.clone())),
        };
        lower.push(lo);
        upper.push(hi);
        value.push(dot(&c.coeffs, &value[..n]));
    }

    // Rows whose logical starts out of bounds get an artificial; their
    // logical becomes nonbasic at the violated bound.
    let infeasible: Vec<usize> = (0..m)
        .filter(|&i| {
            let v = &value[n + i];
            lower[n + i].as_ref().is_some_and(|lo| v < lo) || upper[n + i].as_ref().is_some_and(|hi| v > hi)
        })
        .collect();
    let mut cols: Vec<usize> = (0..n).collect();
    cols.extend(infeasible.iter().map(|&i| n + i));
    let first_artificial = n + m;
    let mut rows = Vec::with_capacity(m);
    let mut basic = Vec::with_capacity(m);
    let mut art_index = 0;
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut row: Vec<Rational> = Vec::with_capacity(cols.len());
        row.extend(c.coeffs.iter().cloned());
        row.resize(cols.len(), Rational::zero());
        if infeasible.get(art_index) == Some(&i) {
            // art = σ·(r_i - a_i·x) with σ chosen so that art starts positive.
            let v = value[n + i].clone();
            let target = match &lower[n + i] {
                Some(lo) if &v < lo => lo.clone(),
                _ => upper[n + i].clone().expect("violated row has a finite bound"),
            };
            let sigma_pos = target > v;
            if sigma_pos {
                for a in row.iter_mut().take(n) {
                    *a = -&*a;
                }
            }
            row[n + art_index] = if sigma_pos { Rational::one() } else { -Rational::one() };
            value.push((&target - &v).abs());
            value[n + i] = target;
            lower.push(Some(Rational::zero()));
            upper.push(None);
            basic.push(first_artificial + art_index);
            art_index += 1;
        } else {
            basic.push(n + i);
        }
        rows.push(row);
    }
    let total = value.len();

    let ncols = cols.len();
    let mut tab = Tableau {
        rows,
        cols,
        basic,
        dead: vec![false; ncols],
        lower,
        upper,
        value,
        cost: vec![Rational::zero(); total],
        reduced: Vec::new(),
        first_artificial,
        bland: false,
        streak: 0,
    };

    if !infeasible.is_empty() {
        for a in first_artificial..total {
            tab.cost[a] = Rational::one();
        }
        tab.price();
        tab.run();
        if tab.objective().is_positive() {
            return Ok(LpOutcome::Infeasible {
                farkas: tab.row_duals(n, m),
            });
        }
        for a in first_artificial..total {
            tab.cost[a] = Rational::zero();
            tab.lower[a] = Some(Rational::zero());
            tab.upper[a] = Some(Rational::zero());
        }
        for k in 0..tab.cols.len() {
            if tab.is_artificial(tab.cols[k]) {
                tab.dead[k] = true;
            }
        }
    }

    let flip = lp.sense == Sense::Max;
    for j in 0..n {
        tab.cost[j] = if flip {
            -&lp.objective[j]
        } else {
            lp.objective[j].clone()
        };
    }
    tab.price();
    match tab.run() {
        Step::Optimal => {
            let primal = tab.value[..n].to_vec();
            let value = dot(&lp.objective, &primal);
            let mut dual = tab.row_duals(n, m);
            if flip {
                for y in &mut dual {
                    *y = -&*y;
                }
            }
            Ok(LpOutcome::Optimal { value, primal, dual })
        }
        Step::Unbounded { col, dir } => {
            let mut ray = vec![Rational::zero(); n];
            let entering = tab.cols[col];
            let sign = Rational::from_integer(dir as i64);
            if entering < n {
                ray[entering] = sign.clone();
            }
            for (i, row) in tab.rows.iter().enumerate() {
                if tab.basic[i] < n {
                    ray[tab.basic[i]] = &row[col] * &sign;
                }
            }
            Ok(LpOutcome::Unbounded {
                primal: tab.value[..n].to_vec(),
                ray,
            })
        }
        Step::Moved => unreachable!("run only returns terminal steps"),
    }
}

fn row_activity(lp: &LinearProgram, x: &[Rational]) -> Vec<Rational> {
    lp.constraints.iter().map(|c| dot(&c.coeffs, x)).collect()
}

fn check_primal(lp: &LinearProgram, x: &[Rational]) -> std::result::Result<(), String> {
    if x.len() != lp.num_vars() {
        return Err("primal vector has the wrong length".into());
    }
    for (j, xj) in x.iter().enumerate() {
        if lp.lower[j].as_ref().is_some_and(|lo| xj < lo) || lp.upper[j].as_ref().is_some_and(|hi| xj > hi) {
            return Err(format!("variable {j} = {xj} violates its bounds"));
        }
    }
    for (i, (c, a)) in lp.constraints.iter().zip(row_activity(lp, x)).enumerate() {
        let ok = match c.relation {
            Relation::Le => a <= c.rhs,
            Relation::Ge => a >= c.rhs,
            Relation::Eq => a == c.rhs,
        };
        if !ok {
            return Err(format!("row {i}: {a} {} {} fails", c.relation, c.rhs));
        }
    }
    Ok(())
}

/// Checks min-form dual feasibility of `y` for objective `c` and returns the
/// dual objective value.
fn min_form_dual_value(lp: &LinearProgram, c: &[Rational], y: &[Rational]) -> std::result::Result<Rational, String> {
    if y.len() != lp.constraints.len() {
        return Err("dual vector has the wrong length".into());
    }
    let mut value = Rational::zero();
    for (i, (row, yi)) in lp.constraints.iter().zip(y).enumerate() {
        let ok = match row.relation {
            Relation::Ge => !yi.is_negative(),
            Relation::Le => !yi.is_positive(),
            Relation::Eq => true,
        };
        if !ok {
            return Err(format!("row {i} multiplier {yi} has the wrong sign"));
        }
        value += &row.rhs * yi;
    }
    for j in 0..lp.num_vars() {
        let mut r = c[j].clone();
        for (row, yi) in lp.constraints.iter().zip(y) {
            if !yi.is_zero() && !row.coeffs[j].is_zero() {
                r -= &row.coeffs[j] * yi;
            }
        }
        if r.is_positive() {
            match &lp.lower[j] {
                Some(lo) => value += &r * lo,
                None => return Err(format!("reduced cost {r} of variable {j} needs a lower bound")),
            }
        } else if r.is_negative() {
            match &lp.upper[j] {
                Some(hi) => value += &r * hi,
                None => return Err(format!("reduced cost {r} of variable {j} needs an upper bound")),
            }
        }
    }
    Ok(value)
}

/// Re-verifies an outcome against `lp` in exact arithmetic, independently of
/// the solver state.
pub fn verify_outcome(lp: &LinearProgram, outcome: &LpOutcome) -> std::result::Result<(), String> {
    match outcome {
        LpOutcome::Optimal { value, primal, dual } => {
            check_primal(lp, primal)?;
            if &dot(&lp.objective, primal) != value {
                return Err("reported value differs from c·x".into());
            }
            let (c, y, target): (Vec<Rational>, Vec<Rational>, Rational) = match lp.sense {
                Sense::Min => (lp.objective.clone(), dual.clone(), value.clone()),
                Sense::Max => (
                    lp.objective.iter().map(|v| -v).collect(),
                    dual.iter().map(|v| -v).collect(),
                    -value,
                ),
            };
            let dual_value = min_form_dual_value(lp, &c, &y)?;
            if dual_value != target {
                return Err(format!("duality gap: primal {target}, dual {dual_value} (min form)"));
            }
            Ok(())
        }
        LpOutcome::Infeasible { farkas } => {
            let zero = vec![Rational::zero(); lp.num_vars()];
            let v = min_form_dual_value(lp, &zero, farkas)?;
            if v.is_positive() {
                Ok(())
            } else {
                Err(format!("Farkas value {v} is not positive"))
            }
        }
        LpOutcome::Unbounded { primal, ray } => {
            check_primal(lp, primal)?;
            if ray.len() != lp.num_vars() {
                return Err("ray has the wrong length".into());
            }
            for (j, d) in ray.iter().enumerate() {
                if (d.is_positive() && lp.upper[j].is_some()) || (d.is_negative() && lp.lower[j].is_some()) {
                    return Err(format!("ray leaves the bounds of variable {j}"));
                }
            }
            for (i, (c, a)) in lp.constraints.iter().zip(row_activity(lp, ray)).enumerate() {
                let ok = match c.relation {
                    Relation::Le => !a.is_positive(),
                    Relation::Ge => !a.is_negative(),
                    Relation::Eq => a.is_zero(),
                };
                if !ok {
                    return Err(format!("ray leaves row {i}"));
                }
            }
            let slope = dot(&lp.objective, ray);
            let improving = match lp.sense {
                Sense::Max => slope.is_positive(),
                Sense::Min => slope.is_negative(),
            };
            if improving {
                Ok(())
            } else {
                Err(format!("ray slope {slope} does not improve the objective"))
            }
        }
    }
}
