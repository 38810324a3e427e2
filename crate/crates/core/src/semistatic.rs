//! Column layout for semi-static strategies inside a linear program.

use std::sync::Arc;

use crate::lp::LinearProgram;
use crate::model::{FiltrationPartition, MarketModel, Strategy};
use crate::rational::Rational;

/// Variables for `α` (one vector, or one per time-0 atom) and for `H_t`
/// (one vector per atom of the filtration at `t - 1`), placed from `offset`.
pub(crate) struct StrategyVars {
    filtration: Arc<FiltrationPartition>,
    k: usize,
    d: usize,
    alpha_per_atom: bool,
    alpha_base: usize,
    /// `h_base[t - 1]` is the first column of `H_t`.
    h_base: Vec<usize>,
    end: usize,
}

impl StrategyVars {
    pub(crate) fn new(
        market: &MarketModel,
        filtration: Arc<FiltrationPartition>,
        offset: usize,
        alpha_per_atom: bool,
    ) -> Self {
        let k = market.num_options();
        let d = market.num_assets();
        let alpha_blocks = if alpha_per_atom { filtration.atoms(0).len() } else { 1 };
        let mut next = offset + alpha_blocks * k;
        let mut h_base = Vec::with_capacity(market.horizon());
        for t in 1..=market.horizon() {
            h_base.push(next);
            next += filtration.atoms(t - 1).len() * d;
        }
        StrategyVars {
            filtration,
            k,
            d,
            alpha_per_atom,
            alpha_base: offset,
            h_base,
            end: next,
        }
    }

    /// One past the last column.
    pub(crate) fn end(&self) -> usize {
        self.end
    }

    pub(crate) fn columns(&self) -> std::ops::Range<usize> {
        self.alpha_base..self.end
    }

    fn alpha_var(&self, w: usize, j: usize) -> usize {
        let block = if self.alpha_per_atom {
            self.filtration.atom_of(0, w)
        } else {
            0
        };
        self.alpha_base + block * self.k + j
    }

    fn h_var(&self, t: usize, w: usize, i: usize) -> usize {
        self.h_base[t - 1] + self.filtration.atom_of(t - 1, w) * self.d + i
    }

    /// Sparse coefficients of the payoff `α·Φ(w) + Σ_t H_t·ΔS_t(w)`.
    pub(crate) fn payoff_terms(&self, market: &MarketModel, w: usize) -> Vec<(usize, Rational)> {
        let mut terms = Vec::new();
        for (j, v) in market.option_values(w).into_iter().enumerate() {
            if !v.is_zero() {
                terms.push((self.alpha_var(w, j), v));
            }
        }
        for t in 1..=market.horizon() {
            for (i, v) in market.delta_s(w, t).into_iter().enumerate() {
                if !v.is_zero() {
                    terms.push((self.h_var(t, w, i), v));
                }
            }
        }
        terms
    }

    /// Coefficients of `α` (or of `α` on the time-0 atom of `w`).
    pub(crate) fn alpha_columns(&self, w: usize) -> Vec<usize> {
        (0..self.k).map(|j| self.alpha_var(w, j)).collect()
    }

    pub(crate) fn set_free(&self, lp: &mut LinearProgram) {
        for j in self.columns() {
            lp.set_free(j);
        }
    }

    pub(crate) fn set_box(&self, lp: &mut LinearProgram, bound: &Rational) {
        for j in self.columns() {
            lp.set_bounds(j, Some(-bound), Some(bound.clone()));
        }
    }

    /// Reads the strategy back from a primal solution.
    pub(crate) fn strategy(&self, market: &MarketModel, primal: &[Rational]) -> Strategy {
        let mut s = Strategy::zero(market, self.filtration.clone());
        for w in 0..market.num_scenarios() {
            for j in 0..self.k {
                s.alpha[w][j] = primal[self.alpha_var(w, j)].clone();
            }
            for t in 1..=market.horizon() {
                for i in 0..self.d {
                    s.holdings[t - 1][w][i] = primal[self.h_var(t, w, i)].clone();
                }
            }
        }
        s
    }
}
