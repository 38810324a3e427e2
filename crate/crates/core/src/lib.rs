//! Pointwise arbitrage theory on finite scenario markets, in exact rational
//! arithmetic.
//!
//! A [`MarketModel`] lists scenarios (price and factor paths), the admissible
//! set `Ω` and statically traded options `Φ`. On top of it the crate computes
//!
//! * the efficient set `Ω*_Φ` and the arbitrage aggregator ([`aggregator`],
//!   [`partition`]),
//! * calibrated martingale measures and polar sets ([`measures`]),
//! * superhedging prices with exact duality ([`hedging`]),
//! * arbitrage detectors and the link to classical no-arbitrage under a
//!   reference probability ([`detectors`]).
//!
//! Every linear program is solved exactly by [`lp::lp_solve`].

#![allow(clippy::needless_range_loop)]

pub mod aggregator;
pub mod corpus;
pub mod detectors;
pub mod error;
pub mod fixtures;
pub mod hedging;
pub mod lp;
pub mod market_file;
pub mod measures;
pub mod model;
pub mod partition;
pub mod rational;
mod semistatic;

pub use error::{Error, Result};
pub use model::{
    FiltrationLabel, FiltrationPartition, FiniteMeasure, Mark, MarketModel, OptionPayoff, Scenario, ScenarioSet,
    Strategy,
};
pub use rational::Rational;
