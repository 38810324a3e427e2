use std::collections::BTreeMap;

use serde_json::{json, Value};

use scenario_arb::aggregator::efficient_scenarios;
use scenario_arb::corpus::{random_market, random_measure, random_payoff, CorpusConfig};
use scenario_arb::detectors::{detect_class_s, detect_one_point, detect_strong, dmw_analysis, verify_finding};
use scenario_arb::hedging::{duality_report, superhedge, superhedges, variational_identity_check, ExtendedValue};
use scenario_arb::market_file::{load_market, load_measure, market_to_json};
use scenario_arb::measures::{efficient_set_oracle, find_calibrated_measure, is_calibrated_martingale_measure};
use scenario_arb::partition::run_partition_scheme;
use scenario_arb::rational::int;
use scenario_arb::{FiniteMeasure, MarketModel, Rational};

use crate::report;
use crate::{expr, CliError, Outcome};

pub fn corpus_market(seed: u64) -> MarketModel {
    random_market(seed, &CorpusConfig::default())
}

/// Reads `--payoff` as a JSON file of per-scenario values when such a file
/// exists, and as an expression otherwise.
pub fn payoff_vector(market: &MarketModel, arg: &str) -> Result<Vec<Rational>, CliError> {
    let path = std::path::Path::new(arg);
    if path.is_file() {
        let text = crate::read(path)?;
        let values: BTreeMap<String, Rational> =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{arg}: {e}")))?;
        let mut g = vec![None; market.num_scenarios()];
        for (id, v) in values {
            let w = market
                .scenario_index(&id)
                .ok_or_else(|| CliError::Input(format!("{arg}: unknown scenario '{id}'")))?;
            g[w] = Some(v);
        }
        return g
            .into_iter()
            .enumerate()
            .map(|(w, v)| {
                v.ok_or_else(|| CliError::Input(format!("{arg}: no value for scenario '{}'", market.scenario_id(w))))
            })
            .collect();
    }
    let e = expr::parse(arg)?;
    e.check(market).map_err(CliError::Input)?;
    Ok((0..market.num_scenarios()).map(|w| e.eval(market, w)).collect())
}

pub fn ftap(market: &MarketModel) -> Result<Outcome, CliError> {
    let scheme = run_partition_scheme(market)?;
    let oracle = efficient_set_oracle(market)?;
    let measure = find_calibrated_measure(market)?;
    let strong = detect_strong(market, &scheme.filtration)?;
    let feasible = measure.is_some();
    let agree = scheme.success == feasible && feasible == !strong.found();
    let mut breach = None;
    if !agree {
        breach = Some("scheme success, measure feasibility and absence of strong arbitrage disagree".into());
    } else if scheme.a_star[scheme.beta] != oracle {
        breach = Some("A*_β differs from the efficient set".into());
    } else if strong.found() && !verify_finding(market, &strong) {
        breach = Some("strong arbitrage witness does not verify".into());
    } else if measure
        .as_ref()
        .is_some_and(|q| !is_calibrated_martingale_measure(market, q))
    {
        breach = Some("calibrated measure does not verify".into());
    }
    let verdict = if scheme.success { "no arbitrage" } else { "arbitrage" };
    let result = json!({
        "verdict": verdict,
        "equivalence": agree,
        "efficient_set": report::set(market, &oracle),
        "scheme": {
            "beta": scheme.beta,
            "success": scheme.success,
            "a_sizes": scheme.a.iter().map(|s| s.len()).collect::<Vec<_>>(),
            "a_star_sizes": scheme.a_star.iter().map(|s| s.len()).collect::<Vec<_>>(),
        },
        "calibrated_measure": measure.as_ref().map(|q| report::measure(market, q)),
        "strong_arbitrage": report::finding(market, &strong),
    });
    Ok(Outcome {
        result,
        summary: format!("ftap: {verdict} (β = {}, |Ω*_Φ| = {})", scheme.beta, oracle.len()),
        breach,
    })
}

pub fn price(market: &MarketModel, g: &[Rational], on_omega: bool) -> Result<Outcome, CliError> {
    let r = duality_report(market, g)?;
    let (set, value, strategy, gap) = if on_omega {
        let direct = superhedge(market, market.omega(), g)?;
        (
            market.omega().clone(),
            direct.value,
            direct.strategy,
            r.omega_gap.clone(),
        )
    } else {
        (r.hedge_set.clone(), r.primal.clone(), r.strategy.clone(), r.gap.clone())
    };
    let mut breach = None;
    if !r.holds() {
        breach = Some(format!(
            "superhedging price {} differs from dual value {}",
            r.primal, r.dual
        ));
    } else if let (ExtendedValue::Finite(x), Some(s)) = (&value, &strategy) {
        if !superhedges(market, s, x, &set, g) {
            breach = Some("optimal strategy does not superhedge".into());
        }
    }
    let result = json!({
        "hedge_set": report::set(market, &set),
        "price": value,
        "strategy": strategy.as_ref().map(|s| report::strategy(market, s)),
        "dual": r.dual,
        "dual_measure": r.dual_measure.as_ref().map(|q| report::measure(market, q)),
        "gap": gap,
        "efficient_set": report::set(market, &r.hedge_set),
        "price_on_efficient_set": r.primal,
        "price_on_omega": r.omega_primal,
        "gap_on_omega": r.omega_gap,
        "duality_holds": r.holds(),
    });
    Ok(Outcome {
        result,
        summary: format!("price: {value} (dual {})", r.dual),
        breach,
    })
}

pub fn partition(market: &MarketModel) -> Result<Outcome, CliError> {
    let scheme = run_partition_scheme(market)?;
    let oracle = efficient_set_oracle(market)?;
    let rounds: Vec<Value> = (0..=scheme.beta)
        .map(|i| {
            json!({
                "a": report::set(market, &scheme.a[i]),
                "a_star": report::set(market, &scheme.a_star[i]),
                "aggregator": report::strategy(market, &scheme.aggregators[i]),
            })
        })
        .collect();
    let semi_static: Vec<Value> = scheme
        .alphas
        .iter()
        .zip(&scheme.dyn_strategies)
        .map(|(alpha, s)| json!({"alpha": alpha, "strategy": report::strategy(market, s)}))
        .collect();
    let filtration: Vec<Vec<Value>> = (0..=market.horizon())
        .map(|t| {
            scheme
                .filtration
                .atoms(t)
                .iter()
                .map(|atom| report::set(market, &atom.iter().copied().collect()))
                .collect()
        })
        .collect();
    let matches_oracle = scheme.a_star[scheme.beta] == oracle;
    let result = json!({
        "beta": scheme.beta,
        "success": scheme.success,
        "rounds": rounds,
        "semi_static": semi_static,
        "combined": report::strategy(market, &scheme.combined),
        "filtration": filtration,
        "matches_oracle": matches_oracle,
    });
    Ok(Outcome {
        result,
        summary: format!(
            "partition: β = {}, {}",
            scheme.beta,
            if scheme.success { "successful" } else { "not successful" }
        ),
        breach: (!matches_oracle).then(|| "A*_β differs from the efficient set".to_string()),
    })
}

pub fn dmw(market: &MarketModel, measure_text: &str) -> Result<Outcome, CliError> {
    let p = load_measure(market, measure_text)?;
    let r = dmw_analysis(market, &p)?;
    let result = json!({
        "u": report::set(market, &r.u),
        "u_star": report::set(market, &r.u_star),
        "omega_p": report::set(market, &r.omega_p),
        "omega_p_star": report::set(market, &r.omega_p_star),
        "no_classical_arbitrage": r.no_classical_arbitrage,
        "full_efficient_mass": r.full_efficient_mass,
        "equivalent_martingale_measure": r.equivalent_martingale_measure,
        "agree": r.agree,
        "no_strong_arbitrage_on_omega_p": r.no_strong_arbitrage_on_omega_p,
        "absolutely_continuous_measure": r.absolutely_continuous_measure,
        "agree_absolutely_continuous": r.agree_absolutely_continuous,
    });
    let breach = if !r.agree {
        Some("the three classical no-arbitrage conditions disagree".to_string())
    } else if !r.agree_absolutely_continuous {
        Some("no strong arbitrage on Ω^P disagrees with an absolutely continuous measure".to_string())
    } else {
        None
    };
    Ok(Outcome {
        result,
        summary: format!(
            "dmw: {} (agree = {})",
            if r.no_classical_arbitrage {
                "no arbitrage"
            } else {
                "arbitrage"
            },
            r.agree
        ),
        breach,
    })
}

struct Checks(Vec<(String, bool)>);

impl Checks {
    fn record(&mut self, name: impl Into<String>, pass: bool) {
        self.0.push((name.into(), pass));
    }
}

fn duality_check(market: &MarketModel, g: &[Rational]) -> Result<bool, CliError> {
    let r = duality_report(market, g)?;
    let strategy_ok = match (&r.primal, &r.strategy) {
        (ExtendedValue::Finite(x), Some(s)) => superhedges(market, s, x, &r.hedge_set, g),
        (ExtendedValue::Finite(_), None) => false,
        (ExtendedValue::NegInf, _) => r.hedge_set.is_empty(),
    };
    Ok(r.holds() && strategy_ok)
}

fn dmw_check(market: &MarketModel, p: &FiniteMeasure) -> Result<bool, CliError> {
    let r = dmw_analysis(market, p)?;
    Ok(r.agree && r.agree_absolutely_continuous)
}

pub fn check(market: &MarketModel, seed: u64) -> Result<Outcome, CliError> {
    let mut c = Checks(Vec::new());
    c.record(
        "market file round trip",
        load_market(&market_to_json(market)).as_ref() == Ok(market),
    );

    let scheme = run_partition_scheme(market)?;
    let oracle = efficient_set_oracle(market)?;
    let measure = find_calibrated_measure(market)?;
    let strong = detect_strong(market, &scheme.filtration)?;
    c.record(
        "scheme success, calibrated measure and no strong arbitrage agree",
        scheme.success == measure.is_some() && measure.is_some() == !strong.found(),
    );
    c.record("A*_β equals the efficient set", scheme.a_star[scheme.beta] == oracle);
    let plain = market.without_options();
    c.record(
        "aggregator efficient set equals the oracle without options",
        efficient_scenarios(&plain)?.efficient == efficient_set_oracle(&plain)?,
    );
    c.record(
        "calibrated measure verifies",
        measure
            .as_ref()
            .is_none_or(|q| is_calibrated_martingale_measure(market, q)),
    );

    let one_point = detect_one_point(market, market.natural_filtration())?;
    c.record(
        "one-point arbitrage iff Ω ≠ Ω*_Φ",
        one_point.found() == (&oracle != market.omega()),
    );
    c.record(
        "arbitrage witnesses verify",
        [&one_point, &strong]
            .iter()
            .all(|f| !f.found() || verify_finding(market, f)),
    );
    let whole = detect_class_s(market, &scheme.filtration, std::slice::from_ref(market.omega()))?;
    c.record(
        "class-S on {Ω} matches strong arbitrage",
        whole.found() == strong.found(),
    );

    let mut payoffs = vec![vec![int(1); market.num_scenarios()]];
    payoffs.extend((0..3).map(|i| random_payoff(market, seed * 4 + i)));
    let mut duality = true;
    for g in &payoffs {
        duality &= duality_check(market, g)?;
    }
    c.record("pricing-hedging duality on Ω*_Φ", duality);

    let mut variational = true;
    for n in 0..market.num_options() {
        variational &= variational_identity_check(market, &payoffs[1], n)?.equal;
    }
    c.record("variational identity", variational);

    let all = (0..market.num_scenarios()).collect();
    let uniform = FiniteMeasure::uniform_on(market.num_scenarios(), &all)?;
    c.record(
        "classical no-arbitrage equivalences",
        dmw_check(market, &uniform)? && dmw_check(market, &random_measure(market, seed, false))?,
    );

    let failed: Vec<&str> = c.0.iter().filter(|(_, pass)| !pass).map(|(n, _)| n.as_str()).collect();
    let breach = (!failed.is_empty()).then(|| failed.join("; "));
    let summary = format!("check: {}/{} passed", c.0.len() - failed.len(), c.0.len());
    let result = json!({
        "checks": c.0.iter().map(|(name, pass)| json!({"name": name, "pass": pass})).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        result,
        summary,
        breach,
    })
}
