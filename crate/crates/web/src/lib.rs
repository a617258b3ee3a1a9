//! Browser bindings: each export takes plain numbers or JSON and returns a JSON string.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use liouville::catalog;
use liouville::grid::uniform_nodes;
use liouville::problem::{build_g, build_psi0, ProblemSpec};
use liouville::regularity::{classify, Verdict};
use liouville::solver::{evaluate_field, evaluate_u};

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn horizon(spec: &ProblemSpec) -> f64 {
    spec.g.blowup_point().map_or(10.0, |tb| 0.999 * tb)
}

/// Field of example `k` on `n_alpha × n_t` samples up to just below the blow-up time.
/// Masked samples come back as `null`.
pub fn surface_json(k: usize, n_alpha: usize, n_t: usize) -> Result<Value, String> {
    let spec = catalog::example(k, n_alpha.clamp(3, 1025)).ok_or_else(|| format!("no example {k}"))?;
    let profile = build_psi0(&spec).map_err(text)?;
    let b = build_g(&spec, horizon(&spec)).map_err(text)?;
    let report = classify(&profile, &b, &spec).map_err(text)?;
    let t_end = match (report.t_star, report.boundary_blowup_time) {
        (Some(t), _) | (None, Some(t)) => 0.98 * t,
        _ => horizon(&spec),
    };
    let alpha = spec.alpha_nodes();
    let t = uniform_nodes(0.0, t_end, n_t.clamp(2, 1025)).map_err(text)?;
    let field = evaluate_field(&profile, &b, &spec, &alpha, &t);
    let rows: Vec<Vec<Option<f64>>> = (0..field.n_t())
        .map(|j| field.row(j).iter().map(|&u| u.is_finite().then_some(u)).collect())
        .collect();
    Ok(json!({ "alpha": alpha, "t": t, "u": rows, "report": report }))
}

/// Example-1 data with boundary values `(1 - t)^{-(1+β)}`: limit kind at `α = ½`
/// and `u(alpha, t)` on a grid accumulating at `t = 1`.
pub fn taxonomy_json(beta: f64, alpha: f64) -> Result<Value, String> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(format!("alpha = {alpha} must lie in (0, 1)"));
    }
    let spec = catalog::with_singular_boundary(&catalog::example1(257), beta).map_err(text)?;
    let profile = build_psi0(&spec).map_err(text)?;
    let b = build_g(&spec, horizon(&spec)).map_err(text)?;
    let report = classify(&profile, &b, &spec).map_err(text)?;
    let limit = report
        .profile_limits
        .iter()
        .min_by(|x, y| (x.alpha - alpha).abs().total_cmp(&(y.alpha - alpha).abs()))
        .map(|l| l.limit);
    let mut curve = Vec::new();
    for k in 0..=120 {
        // 1 - t from 1 down to 1e-6
        let t = 1.0 - 10f64.powf(-6.0 * k as f64 / 120.0);
        let u = evaluate_u(&profile, &b, &spec, alpha, t).map_err(text)?;
        curve.push([t, u]);
    }
    Ok(json!({ "beta": beta, "alpha": alpha, "limit": limit, "beta_case": report.beta_case, "curve": curve }))
}

/// Classification of a problem spec given as JSON.
pub fn classify_json(spec_json: &str) -> Result<Value, String> {
    let spec = ProblemSpec::from_json(spec_json).map_err(text)?;
    let profile = build_psi0(&spec).map_err(text)?;
    let b = build_g(&spec, horizon(&spec)).map_err(text)?;
    let report = classify(&profile, &b, &spec).map_err(text)?;
    let global = report.verdict == Verdict::Global;
    Ok(json!({ "report": report, "global": global }))
}

#[wasm_bindgen]
pub fn surface(k: usize, n_alpha: usize, n_t: usize) -> Result<String, JsValue> {
    to_js(surface_json(k, n_alpha, n_t))
}

#[wasm_bindgen]
pub fn taxonomy(beta: f64, alpha: f64) -> Result<String, JsValue> {
    to_js(taxonomy_json(beta, alpha))
}

#[wasm_bindgen]
pub fn classify_spec(spec_json: &str) -> Result<String, JsValue> {
    to_js(classify_json(spec_json))
}

/// Spec JSON of example `k`, used to prefill the editor.
#[wasm_bindgen]
pub fn example_spec(k: usize) -> Option<String> {
    catalog::example(k, 257).map(|s| s.to_json())
}
