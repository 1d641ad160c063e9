//! Browser bindings for the demo page in `www/`.
//!
//! Three operations: draw a calibration curve from recorded surprises,
//! bound the bunker's military belief as the evidence strengths move, and
//! condition the window example's masses on a typed formula.

use surprise_core::constraints::{self, Interval};
use surprise_core::scenario::subset;
use surprise_core::{BelTerm, CalibrationCurve, Scenario};
use wasm_bindgen::prelude::*;

const BUNKER: &str = include_str!("../../core/scenarios/bunker.bel");
const WINDOW: &str = include_str!("../../core/scenarios/window.bel");

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Parses `x y surprise` lines (surprise on the 0..10 scale).
fn entries(text: &str) -> Result<Vec<(u64, u64, f64)>, JsError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let parts: Vec<&str> = l.split_whitespace().collect();
            match parts.as_slice() {
                [x, y, s] => Ok((x.parse().map_err(js_err)?, y.parse().map_err(js_err)?, s.parse().map_err(js_err)?)),
                _ => Err(JsError::new(&format!("expected `x y surprise`, got `{l}`"))),
            }
        })
        .collect()
}

/// Curve through the recorded entries, sampled at `samples` evenly spaced
/// log ratios from 1:1 to 10⁹:1. Returns `[log_ratio, surprise, ...]`.
#[wasm_bindgen]
pub fn calibration_curve(text: &str, samples: usize) -> Result<Vec<f64>, JsError> {
    let curve = CalibrationCurve::new(&entries(text)?).map_err(js_err)?;
    let max = (surprise_core::calibration::MAX_RATIO as f64).ln();
    let n = samples.max(2);
    Ok((0..n)
        .flat_map(|i| {
            let r = max * i as f64 / (n - 1) as f64;
            [r, curve.at_log_ratio(r)]
        })
        .collect())
}

/// Surprise of one announced ratio under the recorded curve.
#[wasm_bindgen]
pub fn calibrated_surprise(text: &str, x: u64, y: u64) -> Result<f64, JsError> {
    let curve = CalibrationCurve::new(&entries(text)?).map_err(js_err)?;
    curve.to_surprise(x, y).map_err(js_err)
}

fn interval_array(i: Interval) -> Vec<f64> {
    vec![i.lo, i.hi, f64::from(u8::from(i.lo_open)), f64::from(u8::from(i.hi_open))]
}

/// Bounds of `Bel(M | P /\ E)` for the bunker with evidence strengths `c`
/// and `d`, as `[lo, hi, lo_open, hi_open]`.
#[wasm_bindgen]
pub fn bunker_bounds(c: f64, d: f64, independence: bool) -> Result<Vec<f64>, JsError> {
    let overrides = [
        ("c".to_string(), c.to_string()),
        ("d".to_string(), d.to_string()),
        ("independence".to_string(), if independence { "on" } else { "off" }.to_string()),
    ];
    let s = Scenario::parse_with(BUNKER, &overrides).map_err(js_err)?;
    let sys = s.compile().map_err(js_err)?;
    let query = BelTerm::parse("Bel(M | P /\\ E)", &s.frame).map_err(js_err)?;
    let b = constraints::bounds(&sys, &query).map_err(js_err)?;
    Ok(interval_array(b.interval))
}

/// The window example's masses conditioned on `formula`, one focal
/// element per line, followed by the surprise at the evidence.
#[wasm_bindgen]
pub fn window_condition(formula: &str) -> Result<String, JsError> {
    let s = Scenario::parse(WINDOW).map_err(js_err)?;
    let m = s.mass_function().map_err(js_err)?.expect("window declares masses");
    let evidence = subset(&s, formula).map_err(js_err)?;
    let surprise = m.surprise(&evidence).map_err(js_err)?;
    let conditioned = m.condition(&evidence).map_err(js_err)?;
    let mut out: String = conditioned.to_string().split("; ").map(|f| format!("{f}\n")).collect();
    out.push_str(&format!("surprise at the evidence: {surprise:.6}\n"));
    Ok(out)
}
