//! JSON building blocks for reports. Scenario sets are listed by id and every
//! rational is a `"p/q"` string.

use serde_json::{json, Map, Value};

use scenario_arb::detectors::ArbitrageFinding;
use scenario_arb::{FiniteMeasure, MarketModel, ScenarioSet, Strategy};

pub fn set(market: &MarketModel, s: &ScenarioSet) -> Value {
    json!(market.ids(s))
}

pub fn strategy(market: &MarketModel, s: &Strategy) -> Value {
    json!(s.summary(market))
}

pub fn measure(market: &MarketModel, q: &FiniteMeasure) -> Value {
    let weights: Map<String, Value> = q
        .support()
        .into_iter()
        .map(|w| (market.scenario_id(w).to_string(), json!(q.weight(w))))
        .collect();
    Value::Object(weights)
}

pub fn finding(market: &MarketModel, f: &ArbitrageFinding) -> Value {
    json!({
        "kind": f.kind,
        "found": f.found(),
        "epsilon": f.epsilon,
        "witness_set": set(market, &f.witness_set),
        "strategy": f.strategy.as_ref().map(|s| strategy(market, s)),
        "charged_set": f.charged_set.as_ref().map(|s| set(market, s)),
        "certificate": f.certificate,
        "note": f.note,
    })
}

pub fn digest(market: &MarketModel) -> Value {
    let names: Vec<&str> = market.options().iter().map(|o| o.name.as_str()).collect();
    json!({
        "horizon": market.horizon(),
        "assets": market.num_assets(),
        "factors": market.num_factors(),
        "scenarios": market.num_scenarios(),
        "omega": market.omega().len(),
        "options": names,
    })
}
