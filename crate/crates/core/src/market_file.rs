//! JSON market files.
//!
//! ```json
//! {
//!   "T": 1, "d": 1, "d_factors": 0,
//!   "scenarios": [
//!     {"id": "up",   "S": [[2], [3]]},
//!     {"id": "down", "S": [[2], [1]]}
//!   ],
//!   "omega": ["up", "down"],
//!   "options": [{"name": "call", "payoff": {"up": "1/2", "down": "-1/2"}}]
//! }
//! ```
//!
//! Rationals are JSON integers or `"p/q"` strings. `Y` may be omitted when
//! `d_factors` is 0, and `omega` defaults to every scenario.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FiniteMeasure, MarketModel, OptionPayoff, Scenario, ScenarioSet};
use crate::rational::Rational;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketFile {
    #[serde(rename = "T")]
    horizon: usize,
    d: usize,
    #[serde(default)]
    d_factors: usize,
    scenarios: Vec<ScenarioEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<Vec<String>>,
    #[serde(default)]
    options: Vec<OptionEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioEntry {
    id: String,
    #[serde(rename = "S")]
    prices: Vec<Vec<Rational>>,
    #[serde(rename = "Y", default, skip_serializing_if = "Option::is_none")]
    factors: Option<Vec<Vec<Rational>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionEntry {
    name: String,
    payoff: BTreeMap<String, Rational>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureFile {
    weights: BTreeMap<String, Rational>,
}

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        Error::Parse {
            location: format!("{path} (line {}, column {})", inner.line(), inner.column()),
            message: inner.to_string(),
        }
    })
}

/// Parses and validates a market file.
pub fn load_market(text: &str) -> Result<MarketModel> {
    let file: MarketFile = parse_json(text)?;
    let mut index = BTreeMap::new();
    for (i, sc) in file.scenarios.iter().enumerate() {
        if index.insert(sc.id.clone(), i).is_some() {
            return Err(Error::Validation(format!("duplicate scenario id {:?}", sc.id)));
        }
    }
    let lookup = |id: &str, what: &str| -> Result<usize> {
        index
            .get(id)
            .copied()
            .ok_or_else(|| Error::Validation(format!("{what} refers to unknown scenario {id:?}")))
    };

    let omega = match &file.omega {
        None => None,
        Some(ids) => {
            let mut set = ScenarioSet::new();
            for id in ids {
                set.insert(lookup(id, "omega")?);
            }
            Some(set)
        }
    };

    let mut options = Vec::with_capacity(file.options.len());
    for opt in &file.options {
        let mut payoff = vec![None; file.scenarios.len()];
        for (id, value) in &opt.payoff {
            payoff[lookup(id, &format!("option {:?}", opt.name))?] = Some(value.clone());
        }
        let payoff = payoff
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    Error::Validation(format!(
                        "option {:?} has no payoff for scenario {:?}",
                        opt.name, file.scenarios[i].id
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        options.push(OptionPayoff {
            name: opt.name.clone(),
            payoff,
        });
    }

    let horizon = file.horizon;
    let d_factors = file.d_factors;
    let scenarios = file
        .scenarios
        .into_iter()
        .map(|sc| {
            let factors = match sc.factors {
                Some(y) => y,
                None if d_factors == 0 => vec![Vec::new(); sc.prices.len()],
                None => {
                    return Err(Error::Validation(format!(
                        "scenario {:?} has no Y but d_factors = {d_factors}",
                        sc.id
                    )))
                }
            };
            Ok(Scenario {
                id: sc.id,
                prices: sc.prices,
                factors,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    MarketModel::new(horizon, file.d, d_factors, scenarios, omega, options)
}

/// Serializes a market in the format read by [`load_market`].
pub fn market_to_json(market: &MarketModel) -> String {
    let file = MarketFile {
        horizon: market.horizon(),
        d: market.num_assets(),
        d_factors: market.num_factors(),
        scenarios: market
            .scenarios()
            .iter()
            .map(|sc| ScenarioEntry {
                id: sc.id.clone(),
                prices: sc.prices.clone(),
                factors: (market.num_factors() > 0).then(|| sc.factors.clone()),
            })
            .collect(),
        omega: (market.omega().len() != market.num_scenarios()).then(|| market.ids(market.omega())),
        options: market
            .options()
            .iter()
            .map(|o| OptionEntry {
                name: o.name.clone(),
                payoff: market
                    .scenarios()
                    .iter()
                    .zip(&o.payoff)
                    .map(|(sc, v)| (sc.id.clone(), v.clone()))
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("market serialization cannot fail")
}

/// Parses `{"weights": {id: rational}}` into a probability on the market's
/// scenarios. Unlisted scenarios get weight zero.
pub fn load_measure(market: &MarketModel, text: &str) -> Result<FiniteMeasure> {
    let file: MeasureFile = parse_json(text)?;
    let mut weights = vec![Rational::zero(); market.num_scenarios()];
    for (id, value) in file.weights {
        let w = market
            .scenario_index(&id)
            .ok_or_else(|| Error::Validation(format!("measure refers to unknown scenario {id:?}")))?;
        weights[w] = value;
    }
    FiniteMeasure::new(weights)
}

/// Serializes a measure in the format read by [`load_measure`].
pub fn measure_to_json(market: &MarketModel, q: &FiniteMeasure) -> String {
    let file = MeasureFile {
        weights: (0..market.num_scenarios())
            .map(|w| (market.scenario_id(w).to_string(), q.weight(w).clone()))
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("measure serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    const M1: &str = r#"{"T": 1, "d": 1, "d_factors": 0,
        "scenarios": [{"id": "u", "S": [[2], [3]]}, {"id": "d", "S": [[2], [1]]}]}"#;

    #[test]
    fn loads_the_coin() {
        let m = load_market(M1).unwrap();
        assert_eq!(m.horizon(), 1);
        assert_eq!(m.num_assets(), 1);
        assert_eq!(m.num_scenarios(), 2);
        assert_eq!(m.omega().len(), 2);
        assert_eq!(m.price(0, 1), &[int(3)]);
    }

    #[test]
    fn empty_omega_is_rejected() {
        let text = M1.replace("\"d_factors\": 0,", "\"d_factors\": 0, \"omega\": [],");
        let err = load_market(&text).unwrap_err();
        assert_eq!(err, Error::Validation("empty Ω".into()));
    }

    #[test]
    fn unknown_fields_and_floats_are_rejected() {
        let text = M1.replace("\"d_factors\": 0,", "\"d_factors\": 0, \"extra\": 1,");
        assert!(matches!(load_market(&text), Err(Error::Parse { .. })));
        let text = M1.replace("[[2], [3]]", "[[2], [3.5]]");
        let err = load_market(&text).unwrap_err();
        match err {
            Error::Parse { location, .. } => assert!(location.contains("scenarios[0].S")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn options_must_cover_every_scenario() {
        let text = M1.replace(
            "\"d_factors\": 0,",
            "\"d_factors\": 0, \"options\": [{\"name\": \"c\", \"payoff\": {\"u\": \"1/2\"}}],",
        );
        assert!(matches!(load_market(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn grid_fixture_has_289_scenarios() {
        let m = fixtures::knock_in_grid(rat(3, 2));
        let m2 = load_market(&market_to_json(&m)).unwrap();
        assert_eq!(m2.num_scenarios(), 289);
        assert_eq!(m2.num_options(), 2);
    }

    #[test]
    fn measure_files() {
        let m = fixtures::m1();
        let q = load_measure(&m, r#"{"weights": {"u": "1/2", "d": "1/2"}}"#).unwrap();
        assert_eq!(q.weights(), &[rat(1, 2), rat(1, 2)]);
        assert!(load_measure(&m, r#"{"weights": {"u": "1/2"}}"#).is_err());
        assert_eq!(load_measure(&m, &measure_to_json(&m, &q)).unwrap(), q);
    }

    proptest! {
        #[test]
        fn round_trip(seed in 0u64..300) {
            let m = crate::corpus::random_market(seed, &crate::corpus::CorpusConfig::default());
            prop_assert_eq!(load_market(&market_to_json(&m)).unwrap(), m);
        }
    }
}
