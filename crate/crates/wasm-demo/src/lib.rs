//! Three operations for the static demo page. Each takes the CSV text and
//! schema JSON and returns a JSON string; errors come back as strings.

use ema_core::dataset::{ingest, summarize, DatasetBundle, SchemaDoc};
use ema_core::problemgen::{enumerate_specs, ProblemSpec};
use ema_core::search::{run_search, SearchRequest};
use serde::Serialize;
use serde_json::Value;
use wasm_bindgen::prelude::*;

const RESIDUAL_ROWS: usize = 10;

fn load(csv: &str, schema: &str) -> Result<DatasetBundle, String> {
    let schema = SchemaDoc::from_json(schema).map_err(|e| e.to_string())?;
    ingest(csv.as_bytes(), &schema).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

pub fn summarize_json(csv: &str, schema: &str, bins: usize) -> Result<String, String> {
    let bundle = load(csv, schema)?;
    to_json(&summarize(&bundle, bins))
}

pub fn problems_json(csv: &str, schema: &str) -> Result<String, String> {
    let bundle = load(csv, schema)?;
    to_json(&enumerate_specs(&bundle))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Candidate {
    rank: usize,
    id: String,
    family: String,
    label: String,
    cv_score: f64,
    holdout_score: f64,
    scores: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    confusion: Option<Value>,
    /// Largest holdout residuals as (rowId, residual).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    worst_residuals: Vec<(usize, f64)>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SearchView {
    search_id: String,
    metric: String,
    total: usize,
    failures: usize,
    candidates: Vec<Candidate>,
}

pub fn search_json(csv: &str, schema: &str, spec_id: &str, budget: usize, top_k: usize, seed: u64) -> Result<String, String> {
    let bundle = load(csv, schema)?;
    let spec: ProblemSpec = enumerate_specs(&bundle)
        .into_iter()
        .find(|s| s.id == spec_id)
        .ok_or_else(|| format!("no problem `{spec_id}` on this dataset"))?;
    let request = SearchRequest::new(&spec.id, budget, top_k, seed);
    let outcome = run_search(&request, &bundle, &spec, &|_| {}).map_err(|e| e.to_string())?;
    let candidates = outcome
        .top()
        .iter()
        .map(|c| {
            let report = &c.holdout_report;
            Ok(Candidate {
                rank: c.rank,
                id: c.id.clone(),
                family: c.descriptor.family.as_str().to_string(),
                label: c.descriptor.label(),
                cv_score: c.cv_score,
                holdout_score: report.score(),
                scores: serde_json::to_value(&report.scores).map_err(|e| e.to_string())?,
                confusion: report.confusion.as_ref().map(serde_json::to_value).transpose().map_err(|e| e.to_string())?,
                worst_residuals: report
                    .by_residual_magnitude()
                    .into_iter()
                    .take(RESIDUAL_ROWS)
                    .map(|r| (r.row_id, r.residual.unwrap_or(0.0)))
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    to_json(&SearchView {
        search_id: outcome.search_id,
        metric: outcome.metric.as_str().to_string(),
        total: outcome.total,
        failures: outcome.failures.len(),
        candidates,
    })
}

#[wasm_bindgen(js_name = summarize)]
pub fn js_summarize(csv: &str, schema: &str, bins: usize) -> Result<String, JsValue> {
    summarize_json(csv, schema, bins).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = problems)]
pub fn js_problems(csv: &str, schema: &str) -> Result<String, JsValue> {
    problems_json(csv, schema).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = search)]
pub fn js_search(csv: &str, schema: &str, spec_id: &str, budget: usize, top_k: usize, seed: u32) -> Result<String, JsValue> {
    search_json(csv, schema, spec_id, budget, top_k, seed.into()).map_err(|e| JsValue::from_str(&e))
}
