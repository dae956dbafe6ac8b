//! Browser bindings: the tau curve, a fourth-moment sweep and config analysis.

use serde_json::{json, Value};
use ulr_ident::iid::tau_table;
use ulr_ident::noniid::fourth_moment_test;
use ulr_ident::{analyze_task, render_text, tau_report, ConfigFile};
use wasm_bindgen::prelude::*;

/// Largest per-side sample size the page may request.
pub const MAX_DEMO_N: usize = 20_000;

pub fn tau_curve_json(a: &[f64], b: &[f64], x_max: f64, points: usize) -> Result<String, String> {
    let doc = tau_report(a, b).map_err(|e| e.to_string())?;
    let rows = tau_table(a, b, x_max, points.clamp(2, 4001)).map_err(|e| e.to_string())?;
    let out = json!({
        "rows": rows,
        "summary": render_text(&doc),
        "report": serde_json::to_value(&doc).map_err(|e| e.to_string())?,
    });
    Ok(out.to_string())
}

pub fn fourth_moment_sweep_json(m1: f64, m2: f64, step_deg: f64) -> Result<String, String> {
    if !(step_deg > 0.0 && step_deg <= 45.0) {
        return Err("step must lie in (0, 45] degrees".into());
    }
    let steps = (360.0 / step_deg).floor() as usize;
    let mut rows = Vec::with_capacity(steps);
    for i in 0..steps {
        let deg = i as f64 * step_deg;
        let (s, c) = deg.to_radians().sin_cos();
        let row: Value = match fourth_moment_test(m1, m2, c, s) {
            Ok(r) => json!({
                "deg": deg,
                "w1": r.w1,
                "w2": r.w2,
                "roots": r.roots_x,
                "verdict": r.verdict,
            }),
            Err(e) => json!({ "deg": deg, "error": e.to_string() }),
        };
        rows.push(row);
    }
    Ok(Value::Array(rows).to_string())
}

/// `oracle_n == 0` skips the oracle.
pub fn analyze_config_json(config: &str, oracle_n: usize, seed: u64) -> Result<String, String> {
    let cfg = ConfigFile::from_json(config).map_err(|e| e.to_string())?;
    let task = cfg.task().map_err(|e| e.to_string())?;
    let oracle = (oracle_n > 0).then(|| {
        cfg.oracle
            .unwrap_or_default()
            .with_seed(seed)
            .with_n(oracle_n.min(MAX_DEMO_N))
    });
    let doc = analyze_task(&task, oracle.as_ref()).map_err(|e| e.to_string())?;
    Ok(json!({ "text": render_text(&doc), "report": serde_json::to_value(&doc).map_err(|e| e.to_string())? }).to_string())
}

#[wasm_bindgen]
pub fn tau_curve(a: Vec<f64>, b: Vec<f64>, x_max: f64, points: usize) -> Result<String, JsError> {
    tau_curve_json(&a, &b, x_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fourth_moment_sweep(m1: f64, m2: f64, step_deg: f64) -> Result<String, JsError> {
    fourth_moment_sweep_json(m1, m2, step_deg).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn analyze_config(config: &str, oracle_n: usize, seed: u32) -> Result<String, JsError> {
    analyze_config_json(config, oracle_n, seed.into()).map_err(|e| JsError::new(&e))
}
