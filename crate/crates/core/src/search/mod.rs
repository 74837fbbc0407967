//! Bounded grid search: interleaved grid truncation, internal cross-validation,
//! holdout evaluation and diversity-capped ranking.

mod registry;

pub use registry::{SearchJob, SearchRegistry, SearchState, SearchStatus};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use serde::{Deserialize, Serialize};

use crate::canonical::{short_id, to_canonical_string};
use crate::dataset::DatasetBundle;
use crate::evaluation::{build_report, compute_metric, cv_folds, make_split, EvalError, EvalReport, SplitPlan, DEFAULT_HOLDOUT_FRACTION};
use crate::learners::{compare_hyperparameters, families, fit, label_targets, value_targets, FamilyId, FittedModel, PipelineDescriptor, Predictions};
use crate::problemgen::{MetricId, ProblemSpec};

pub const CV_FOLDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchRequest {
    pub spec_id: String,
    pub budget: usize,
    pub top_k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_fraction")]
    pub holdout_fraction: f64,
}

fn default_fraction() -> f64 {
    DEFAULT_HOLDOUT_FRACTION
}

impl SearchRequest {
    pub fn new(spec_id: &str, budget: usize, top_k: usize, seed: u64) -> Self {
        SearchRequest { spec_id: spec_id.to_string(), budget, top_k, seed, holdout_fraction: DEFAULT_HOLDOUT_FRACTION }
    }

    /// Content id: the same request on the same dataset always maps to the same search.
    pub fn search_id(&self, dataset_id: &str) -> String {
        let key = serde_json::json!({ "datasetId": dataset_id, "request": self });
        short_id("search", to_canonical_string(&key).as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CandidateModel {
    pub id: String,
    pub descriptor: PipelineDescriptor,
    /// Mean validation score over the folds that could be fitted.
    pub cv_score: f64,
    pub cv_folds: usize,
    pub holdout_report: EvalReport,
    pub rank: usize,
    pub model: FittedModel,
}

impl CandidateModel {
    pub fn holdout_score(&self, metric: MetricId) -> Option<f64> {
        self.holdout_report.scores.get(&metric).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfigFailure {
    pub family: FamilyId,
    pub label: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchOutcome {
    pub search_id: String,
    pub dataset_id: String,
    pub request: SearchRequest,
    pub metric: MetricId,
    pub split: SplitPlan,
    /// Grid points scheduled (≤ budget).
    pub total: usize,
    /// Every surviving candidate in rank order; the first `returned` are the ranked top-k.
    pub candidates: Vec<CandidateModel>,
    pub returned: usize,
    #[serde(default)]
    pub failures: Vec<ConfigFailure>,
}

impl SearchOutcome {
    pub fn top(&self) -> &[CandidateModel] {
        &self.candidates[..self.returned]
    }

    pub fn candidate(&self, id: &str) -> Option<&CandidateModel> {
        self.candidates.iter().find(|c| c.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("budget and topK must both be at least 1")]
    InvalidRequest,
    #[error("spec `{spec}` belongs to dataset `{expected}`, not `{got}`")]
    DatasetMismatch { spec: String, expected: String, got: String },
    #[error("request names spec `{requested}` but spec `{given}` was supplied")]
    SpecMismatch { requested: String, given: String },
    #[error(transparent)]
    Split(#[from] EvalError),
    #[error("every configuration failed: {}", summarize_failures(.0))]
    AllFailed(Vec<ConfigFailure>),
    #[error("metric {0} missing from at least one report")]
    MetricAbsent(MetricId),
    #[error("search failed: {0}")]
    Failed(String),
}

fn summarize_failures(failures: &[ConfigFailure]) -> String {
    let mut by_family: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for f in failures {
        by_family.entry(f.family.as_str()).or_default().push(&f.message);
    }
    by_family
        .iter()
        .map(|(fam, msgs)| format!("{fam}: {}", msgs[0]))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Grid points for `spec` in scheduling order: one point from each family in
/// turn, truncated to `budget`.
pub fn schedule(spec: &ProblemSpec, season: Option<usize>, budget: usize) -> Vec<PipelineDescriptor> {
    let grids: Vec<Vec<PipelineDescriptor>> = families(spec.task_type, season).iter().map(|g| g.descriptors()).collect();
    let longest = grids.iter().map(Vec::len).max().unwrap_or(0);
    (0..longest)
        .flat_map(|i| grids.iter().filter_map(move |g| g.get(i).cloned()))
        .take(budget)
        .collect()
}

pub fn candidate_id(spec: &ProblemSpec, descriptor: &PipelineDescriptor, seed: u64, holdout_fraction: f64) -> String {
    let key = serde_json::json!({
        "specId": spec.id,
        "descriptor": descriptor,
        "seed": seed,
        "holdoutFraction": crate::hexfloat::format(holdout_fraction),
    });
    short_id("cand", to_canonical_string(&key).as_bytes())
}

/// Ranking order: better score first, then family id, then hyperparameters.
fn compare(a: &CandidateModel, b: &CandidateModel, metric: MetricId) -> Ordering {
    let (sa, sb) = (a.holdout_score(metric).unwrap_or(f64::NAN), b.holdout_score(metric).unwrap_or(f64::NAN));
    let by_score = if metric.higher_is_better() { sb.total_cmp(&sa) } else { sa.total_cmp(&sb) };
    by_score
        .then_with(|| a.descriptor.family.as_str().cmp(b.descriptor.family.as_str()))
        .then_with(|| compare_hyperparameters(&a.descriptor.hyperparameters, &b.descriptor.hyperparameters))
}

/// Sort by holdout score under `metric` (direction-aware, stable tie-break).
pub fn rank(mut candidates: Vec<CandidateModel>, metric: MetricId) -> Result<Vec<CandidateModel>, SearchError> {
    if candidates.iter().any(|c| c.holdout_score(metric).is_none()) {
        return Err(SearchError::MetricAbsent(metric));
    }
    candidates.sort_by(|a, b| compare(a, b, metric));
    Ok(candidates)
}

/// Take the best `top_k` with at most ceil(top_k/2) per family, filling from
/// capped families only when nothing else is left. Ranks 1..=k go to the
/// chosen candidates in metric order, the rest follow in metric order.
pub fn select_diverse(ranked: Vec<CandidateModel>, top_k: usize, metric: MetricId) -> (Vec<CandidateModel>, usize) {
    let cap = top_k.div_ceil(2);
    let mut per_family: BTreeMap<FamilyId, usize> = BTreeMap::new();
    let mut chosen = Vec::new();
    let mut skipped = Vec::new();
    for c in ranked {
        let n = per_family.entry(c.descriptor.family).or_default();
        if chosen.len() < top_k && *n < cap {
            *n += 1;
            chosen.push(c);
        } else {
            skipped.push(c);
        }
    }
    let mut rest = Vec::new();
    for c in skipped {
        if chosen.len() < top_k {
            chosen.push(c);
        } else {
            rest.push(c);
        }
    }
    chosen.sort_by(|a, b| compare(a, b, metric));
    let returned = chosen.len();
    let mut all = chosen;
    all.extend(rest);
    for (i, c) in all.iter_mut().enumerate() {
        c.rank = i + 1;
    }
    (all, returned)
}

fn truth(bundle: &DatasetBundle, spec: &ProblemSpec, rows: &[usize]) -> Result<Predictions, crate::learners::LearnError> {
    Ok(if spec.task_type.is_numeric() {
        Predictions::Values(value_targets(bundle, &spec.target, rows)?.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
    } else {
        Predictions::Labels(label_targets(bundle, &spec.target, rows)?.into_iter().map(Option::unwrap_or_default).collect())
    })
}

struct Scored {
    cv_score: f64,
    cv_folds: usize,
    model: FittedModel,
    report: EvalReport,
}

fn evaluate_config(
    descriptor: &PipelineDescriptor,
    candidate_id: &str,
    bundle: &DatasetBundle,
    spec: &ProblemSpec,
    split: &SplitPlan,
    folds: &[crate::evaluation::Fold],
    seed: u64,
) -> Result<Scored, String> {
    let mut scores = Vec::new();
    let mut first_error = None;
    for fold in folds {
        let attempt = fit(descriptor, bundle, &fold.fit, spec, seed)
            .and_then(|m| m.predict(bundle, &fold.validate))
            .map_err(|e| e.to_string())
            .and_then(|pred| {
                let t = truth(bundle, spec, &fold.validate).map_err(|e| e.to_string())?;
                compute_metric(spec.metric, &t, &pred).map_err(|e| e.to_string())
            });
        match attempt {
            Ok(s) => scores.push(s),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if scores.is_empty() {
        return Err(format!("cross-validation: {}", first_error.unwrap_or_else(|| "no folds".into())));
    }
    let model = fit(descriptor, bundle, &split.train_row_ids, spec, seed).map_err(|e| e.to_string())?;
    let report = build_report(candidate_id, &model, spec, split, bundle).map_err(|e| e.to_string())?;
    Ok(Scored { cv_score: scores.iter().sum::<f64>() / scores.len() as f64, cv_folds: scores.len(), model, report })
}

/// Run a complete search. `progress` receives the number of configurations
/// evaluated so far after each one finishes; results never depend on the
/// order in which configurations complete.
pub fn run_search(
    request: &SearchRequest,
    bundle: &DatasetBundle,
    spec: &ProblemSpec,
    progress: &(dyn Fn(usize) + Sync),
) -> Result<SearchOutcome, SearchError> {
    if request.budget == 0 || request.top_k == 0 {
        return Err(SearchError::InvalidRequest);
    }
    if request.spec_id != spec.id {
        return Err(SearchError::SpecMismatch { requested: request.spec_id.clone(), given: spec.id.clone() });
    }
    if spec.dataset_id != bundle.id() {
        return Err(SearchError::DatasetMismatch {
            spec: spec.id.clone(),
            expected: spec.dataset_id.clone(),
            got: bundle.id().to_string(),
        });
    }
    let split = make_split(bundle, spec, request.seed, request.holdout_fraction)?;
    let folds = cv_folds(bundle, spec, &split.train_row_ids, request.seed, CV_FOLDS)?;
    let configs = schedule(spec, bundle.metadata().season_period, request.budget);
    let done = AtomicUsize::new(0);
    let evaluate = |descriptor: &PipelineDescriptor| {
        let id = candidate_id(spec, descriptor, request.seed, request.holdout_fraction);
        let result = evaluate_config(descriptor, &id, bundle, spec, &split, &folds, request.seed).map(|s| (id, s));
        progress(done.fetch_add(1, AtomicOrdering::SeqCst) + 1);
        result
    };
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        configs.par_iter().map(evaluate).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = configs.iter().map(evaluate).collect();

    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    for (descriptor, result) in configs.iter().zip(results) {
        match result {
            Ok((id, s)) => candidates.push(CandidateModel {
                id,
                descriptor: descriptor.clone(),
                cv_score: s.cv_score,
                cv_folds: s.cv_folds,
                holdout_report: s.report,
                rank: 0,
                model: s.model,
            }),
            Err(message) => failures.push(ConfigFailure { family: descriptor.family, label: descriptor.label(), message }),
        }
    }
    if candidates.is_empty() {
        return Err(SearchError::AllFailed(failures));
    }
    let ranked = rank(candidates, spec.metric)?;
    let (candidates, returned) = select_diverse(ranked, request.top_k, spec.metric);
    Ok(SearchOutcome {
        search_id: request.search_id(bundle.id()),
        dataset_id: bundle.id().to_string(),
        request: request.clone(),
        metric: spec.metric,
        split,
        total: configs.len(),
        candidates,
        returned,
        failures,
    })
}
