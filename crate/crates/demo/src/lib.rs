//! Browser bindings: fit a graph on simulated data, solve for a separating
//! set with estimates, and trace bias against sample size.
//!
//! Every export returns a JSON string so the page needs no glue beyond
//! `JSON.parse`. Seeds are `u32` on the JS side to avoid BigInt.

use sepset::data::StackedDataset;
use sepset::estimators::EstimatorKind;
use sepset::graph::EdgeRule;
use sepset::mgm::fit_mgm;
use sepset::pipeline::{run_pipeline, PipelineConfig};
use sepset::rng::stream;
use sepset::sepset::{SepsetConfig, SepsetMode};
use sepset::simulate::{classify_set, generate_dataset, oracle_graph, run_simulation, SetKind, SimConfig};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const POPULATION: usize = 2000;
const POOL_FACTOR: usize = 8;

fn parse_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect()
}

fn parse_rule(rule: &str) -> Result<EdgeRule, String> {
    match rule {
        "and" => Ok(EdgeRule::And),
        "or" => Ok(EdgeRule::Or),
        other => Err(format!("unknown edge rule {other:?}")),
    }
}

fn design(n: usize, seed: u64) -> Result<StackedDataset, String> {
    generate_dataset(&mut stream(seed, 0xDE40, n as u64), n, POPULATION, POOL_FACTOR).map_err(|e| e.to_string())
}

/// Graph over the design covariates, outcome and treatment.
pub fn graph_json(n: usize, seed: u64, rule: &str) -> Result<Value, String> {
    let ds = design(n, seed)?;
    let mut config = SepsetConfig::default();
    config.mgm.rule = parse_rule(rule)?;
    let graph = fit_mgm(&ds, true, &config.mgm).map_err(|e| e.to_string())?;
    Ok(json!({ "graph": graph.to_json(), "truth": oracle_graph().to_json() }))
}

/// Separating set and IPW, AIPW and naive estimates on one simulated study.
pub fn solve_json(
    n: usize,
    seed: u64,
    mode: &str,
    rule: &str,
    sampling: &str,
    heterogeneity: &str,
    unmeasured: &str,
) -> Result<Value, String> {
    let ds = design(n, seed)?;
    let mut config = PipelineConfig::marginal(&[]);
    config.sampling = parse_list(sampling);
    config.heterogeneity = parse_list(heterogeneity);
    config.unmeasured = parse_list(unmeasured);
    config.mode = match mode {
        "marginal" => SepsetMode::Marginal,
        "exact" => SepsetMode::Exact,
        other => return Err(format!("unknown mode {other:?}")),
    };
    config.sepset.mgm.rule = parse_rule(rule)?;
    config.estimators = vec![EstimatorKind::Ipw, EstimatorKind::Aipw, EstimatorKind::SateDim];
    config.validate().map_err(|e| e.to_string())?;
    let out = run_pipeline(&ds, &config).map_err(|e| e.to_string())?;
    let estimates: Vec<Value> = out
        .estimates
        .iter()
        .map(|e| json!({ "estimator": e.estimator.as_str(), "point": e.point }))
        .collect();
    let set_type = out.feasible().then(|| classify_set(&oracle_graph(), &out.fit.solution.selected).as_str());
    Ok(json!({
        "solution": out.fit.solution,
        "set_type": set_type,
        "graph": out.fit.graph.to_json(),
        "estimates": estimates,
    }))
}

/// Mean bias of IPW with the oracle and estimated sets, and of the naive
/// difference in means, at each size.
pub fn bias_json(sizes: &str, reps: usize, seed: u64) -> Result<Value, String> {
    let sizes = parse_list(sizes)
        .iter()
        .map(|s| s.parse::<usize>().map_err(|_| format!("bad sample size {s:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    let config = SimConfig {
        sizes: sizes.clone(),
        m: POPULATION,
        reps,
        seed,
        constrained: false,
        estimators: vec![EstimatorKind::Ipw, EstimatorKind::SateDim],
        ..SimConfig::default()
    };
    let sim = run_simulation(&config).map_err(|e| e.to_string())?;
    let series = [
        ("IPW, oracle sampling set", EstimatorKind::Ipw, SetKind::OracleSampling),
        ("IPW, estimated marginal set", EstimatorKind::Ipw, SetKind::Marginal),
        ("Difference in means", EstimatorKind::SateDim, SetKind::Naive),
    ];
    let out: Vec<Value> = series
        .iter()
        .map(|(label, est, kind)| {
            let points: Vec<Value> = sizes
                .iter()
                .filter_map(|&n| sim.bias_row(n, *est, *kind))
                .map(|r| json!({ "n": r.n, "bias": r.bias, "se": r.se, "reps": r.reps_used }))
                .collect();
            json!({ "label": label, "points": points })
        })
        .collect();
    Ok(json!({ "series": out }))
}

fn export(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fitGraph)]
pub fn fit_graph(n: usize, seed: u32, rule: &str) -> Result<String, JsError> {
    export(graph_json(n, seed.into(), rule))
}

#[wasm_bindgen(js_name = solveSepset)]
pub fn solve_sepset(
    n: usize,
    seed: u32,
    mode: &str,
    rule: &str,
    sampling: &str,
    heterogeneity: &str,
    unmeasured: &str,
) -> Result<String, JsError> {
    export(solve_json(n, seed.into(), mode, rule, sampling, heterogeneity, unmeasured))
}

#[wasm_bindgen(js_name = biasCurve)]
pub fn bias_curve(sizes: &str, reps: usize, seed: u32) -> Result<String, JsError> {
    export(bias_json(sizes, reps, seed.into()))
}
