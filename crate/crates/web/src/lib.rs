//! Browser bindings: run presets or edited scenarios, draw membership
//! functions, and sweep a rule block along one feature.
//!
//! Everything crosses the boundary as JSON strings. The plain functions are
//! callable natively; the `#[wasm_bindgen]` wrappers only translate errors.

use fuzzmarket::dsl::library;
use fuzzmarket::fuzzy::{ConsequentCenters, Term, TermFamily};
use fuzzmarket::indicators::{Feature, FeatureVector};
use fuzzmarket::io::{figure_preset, summarize, ScenarioFile, PRESET_NAMES};
use fuzzmarket::{parse_rule_block, simulate, BuiltinGroup, Error, Regime};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn grid(lo: f64, hi: f64, samples: usize) -> Result<Vec<f64>, String> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || !(2..=10_000).contains(&samples) {
        return Err(format!("bad sweep: [{lo}, {hi}] with {samples} samples"));
    }
    let step = (hi - lo) / (samples - 1) as f64;
    Ok((0..samples).map(|i| lo + step * i as f64).collect())
}

pub fn preset_names() -> String {
    json!(PRESET_NAMES).to_string()
}

pub fn preset(name: &str) -> Result<String, String> {
    figure_preset(name)
        .map(|f| f.to_json())
        .map_err(|e| e.to_string())
}

/// Run a scenario (JSON text) with the given seed. Returns prices, the
/// regime switch, per-group demand series and summary statistics.
pub fn run(scenario_json: &str, seed: u64) -> Result<String, String> {
    let mut file = ScenarioFile::from_json(scenario_json).map_err(|e| e.to_string())?;
    file.seed = seed;
    let scenario = file.resolve(None).map_err(|e| e.to_string())?;
    let (rec, failure) = match simulate(&scenario) {
        Ok(rec) => (rec, None),
        Err(Error::Numerical {
            t,
            message,
            partial,
        }) => (*partial, Some(format!("stopped at t={t}: {message}"))),
        Err(e) => return Err(e.to_string()),
    };
    let groups: Vec<Value> = rec
        .group_ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let ed: Vec<f64> = rec.rows.iter().map(|r| r.groups[i].ed).collect();
            json!({ "id": id, "ed": ed })
        })
        .collect();
    let model_start = rec
        .rows
        .iter()
        .find(|r| r.regime == Regime::Model)
        .map(|r| r.t);
    Ok(json!({
        "prices": rec.prices(),
        "model_start": model_start,
        "groups": groups,
        "summary": summarize(&rec, seed, 4.0 * scenario.sigma),
        "failure": failure,
    })
    .to_string())
}

/// The seven input sets of width `w` sampled on `[lo, hi]`.
pub fn membership(w: f64, lo: f64, hi: f64, samples: usize) -> Result<String, String> {
    let fam = TermFamily::new(w).map_err(|e| e.to_string())?;
    let xs = grid(lo, hi, samples)?;
    let terms: Vec<Value> = Term::ALL
        .iter()
        .map(|&t| {
            let ys: Vec<f64> = xs
                .iter()
                .map(|&x| fam.membership(t, x).unwrap_or(0.0))
                .collect();
            json!({ "label": t.label(), "y": ys })
        })
        .collect();
    Ok(json!({ "x": xs, "terms": terms }).to_string())
}

/// Evaluate a rule block along `feature`, every other feature fixed at
/// `others` (or absent when `others` is NaN). `source` is rule text or the
/// name of a bundled group such as `"ed2"`. Inactive points are `null`.
pub fn rule_curve(
    source: &str,
    feature: &str,
    w: f64,
    others: f64,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<String, String> {
    let text = match source.trim().parse::<BuiltinGroup>() {
        Ok(g) => library::source(g)
            .ok_or_else(|| format!("{g} has no rule file (it needs state beyond the features)"))?,
        Err(_) => source,
    };
    let block = parse_rule_block(text).map_err(|diags| {
        diags
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("\n")
    })?;
    let feature: Feature = feature.parse().map_err(|e: Error| e.to_string())?;
    let fam = TermFamily::new(w).map_err(|e| e.to_string())?;
    let compiled = block.compile(fam, ConsequentCenters::STANDARD);
    let xs = grid(lo, hi, samples)?;
    let mut base = FeatureVector::new();
    if others.is_finite() {
        for i in 1..=10 {
            base.set(format!("x{i}").parse().expect("feature name"), Some(others));
        }
    }
    let ed: Vec<Option<f64>> = xs
        .iter()
        .map(|&x| {
            let mut fv = base;
            fv.set(feature, Some(x));
            let e = compiled.evaluate(&fv);
            e.active.then_some(e.value)
        })
        .collect();
    Ok(json!({
        "x": xs,
        "ed": ed,
        "name": block.name,
        "rules": block.rules.len(),
        "source": block.to_string(),
    })
    .to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = presetNames)]
pub fn preset_names_js() -> String {
    preset_names()
}

#[wasm_bindgen(js_name = preset)]
pub fn preset_js(name: &str) -> Result<String, JsValue> {
    js(preset(name))
}

#[wasm_bindgen(js_name = run)]
pub fn run_js(scenario_json: &str, seed: u32) -> Result<String, JsValue> {
    js(run(scenario_json, seed as u64))
}

#[wasm_bindgen(js_name = membership)]
pub fn membership_js(w: f64, lo: f64, hi: f64, samples: usize) -> Result<String, JsValue> {
    js(membership(w, lo, hi, samples))
}

#[wasm_bindgen(js_name = ruleCurve)]
pub fn rule_curve_js(
    source: &str,
    feature: &str,
    w: f64,
    others: f64,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<String, JsValue> {
    js(rule_curve(source, feature, w, others, lo, hi, samples))
}
