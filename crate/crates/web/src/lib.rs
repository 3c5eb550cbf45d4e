//! Browser entry points. The `*_json` functions hold the logic and are
//! tested natively; the `#[wasm_bindgen]` wrappers only convert errors.

use coopbandit::experiments::{bound_curves, run_experiment, ExperimentConfig};
use coopbandit::graphs::{graph_indices, named, DivisorMode, Graph, KappaSpec};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Upper limit on `runs * T * M` for one request; the page runs on the main thread.
pub const MAX_WORK: usize = 20_000_000;

fn parse_graph(source: &str) -> Result<Graph, String> {
    let source = source.trim();
    if source.contains(char::is_whitespace) {
        Graph::parse_edge_list(source)
    } else {
        named(source)
    }
    .map_err(|e| e.to_string())
}

/// Indices of a named graph (`house`, `ring6`, ...) or edge-list text.
/// A non-finite `kappa` selects the max-degree step size.
pub fn indices_json(graph: &str, kappa: f64) -> Result<String, String> {
    let g = parse_graph(graph)?;
    let mode = DivisorMode::DmaxPlusOne;
    let kappa = if kappa.is_finite() {
        kappa
    } else {
        KappaSpec::DmaxRatio.resolve(&g, mode)
    };
    let idx = graph_indices(&g, kappa, mode).map_err(|e| e.to_string())?;
    let edges: Vec<[usize; 2]> = g.edges().into_iter().map(|(a, b)| [a + 1, b + 1]).collect();
    Ok(json!({ "num_agents": g.num_agents(), "edges": edges, "indices": idx }).to_string())
}

fn parse_config(config: &str) -> Result<ExperimentConfig, String> {
    let cfg = ExperimentConfig::from_json(config).map_err(|e| e.to_string())?;
    let m = cfg
        .graph_spec
        .build(cfg.master_seed)
        .map_err(|e| e.to_string())?
        .num_agents();
    let work = cfg.runs.saturating_mul(cfg.t).saturating_mul(m);
    if work > MAX_WORK {
        return Err(format!(
            "runs x T x M = {work} exceeds the demo limit of {MAX_WORK}"
        ));
    }
    Ok(cfg)
}

/// Mean regret curves (group and per agent) for a JSON experiment config.
pub fn simulate_json(config: &str) -> Result<String, String> {
    let cfg = parse_config(config)?;
    let s = run_experiment(&cfg).map_err(|e| e.to_string())?;
    Ok(json!({
        "label": s.label,
        "runs": s.runs,
        "horizon": s.horizon,
        "group_mean": s.group_mean,
        "group_sem": s.group_sem,
        "agent_mean": s.agent_mean,
        "collision_mean": s.collision_mean,
    })
    .to_string())
}

/// Analytic bound curves for a JSON config with fixed arm means.
pub fn bounds_json(config: &str) -> Result<String, String> {
    let cfg = parse_config(config)?;
    let curves = bound_curves(&cfg).map_err(|e| e.to_string())?;
    let curves: Vec<_> = curves
        .iter()
        .map(|c| json!({ "name": c.kind.name(), "values": c.values }))
        .collect();
    Ok(json!({ "label": cfg.label(), "curves": curves }).to_string())
}

#[wasm_bindgen]
pub fn indices(graph: &str, kappa: f64) -> Result<String, JsValue> {
    indices_json(graph, kappa).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate(config: &str) -> Result<String, JsValue> {
    simulate_json(config).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bounds(config: &str) -> Result<String, JsValue> {
    bounds_json(config).map_err(|e| JsValue::from_str(&e))
}
