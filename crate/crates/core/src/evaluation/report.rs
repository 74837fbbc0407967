use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{compute_metric, metric_flags, per_class_scores, ClassScores, EvalError, SplitPlan};
use crate::dataset::{render_datetime_opt, DatasetBundle, RowId};
use crate::learners::{label_targets, value_targets, FittedModel, Predictions};
use crate::problemgen::{MetricId, ProblemSpec, TaskType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetValue {
    Label(String),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceRecord {
    pub row_id: RowId,
    pub truth: TargetValue,
    pub prediction: TargetValue,
    /// prediction − truth, numeric tasks only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    /// Timestamp of the row, forecasting only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<String>,
}

/// Rows are true labels, columns predicted labels, both in `labels` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub cells: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_pairs(labels: Vec<String>, truth: &[String], pred: &[String]) -> Self {
        let index = |l: &String| labels.binary_search(l).expect("label set covers all pairs");
        let mut cells = vec![vec![0; labels.len()]; labels.len()];
        for (t, p) in truth.iter().zip(pred) {
            cells[index(t)][index(p)] += 1;
        }
        ConfusionMatrix { labels, cells }
    }

    pub fn total(&self) -> usize {
        self.cells.iter().flatten().sum()
    }

    pub fn row_sum(&self, label: &str) -> usize {
        self.labels.iter().position(|l| l == label).map_or(0, |i| self.cells[i].iter().sum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalReport {
    pub candidate_id: String,
    pub task_type: TaskType,
    pub metric: MetricId,
    /// Holdout instances in ascending row order.
    pub per_instance: Vec<InstanceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
    pub scores: BTreeMap<MetricId, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class_scores: Option<BTreeMap<String, ClassScores>>,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl EvalReport {
    pub fn score(&self) -> f64 {
        self.scores[&self.metric]
    }

    pub fn truth(&self) -> Predictions {
        collect(self.per_instance.iter().map(|r| &r.truth))
    }

    pub fn predictions(&self) -> Predictions {
        collect(self.per_instance.iter().map(|r| &r.prediction))
    }

    /// Numeric tasks: instances by decreasing |residual|, ties by row id.
    pub fn by_residual_magnitude(&self) -> Vec<&InstanceRecord> {
        let mut out: Vec<&InstanceRecord> = self.per_instance.iter().filter(|r| r.residual.is_some()).collect();
        out.sort_by(|a, b| {
            let (ra, rb) = (a.residual.unwrap().abs(), b.residual.unwrap().abs());
            rb.total_cmp(&ra).then(a.row_id.cmp(&b.row_id))
        });
        out
    }
}

fn collect<'a>(values: impl Iterator<Item = &'a TargetValue>) -> Predictions {
    let values: Vec<&TargetValue> = values.collect();
    if values.iter().all(|v| matches!(v, TargetValue::Label(_))) && !values.is_empty() {
        Predictions::Labels(values.iter().map(|v| match v {
            TargetValue::Label(l) => l.clone(),
            TargetValue::Value(_) => unreachable!(),
        }).collect())
    } else {
        Predictions::Values(values.iter().map(|v| match v {
            TargetValue::Value(x) => *x,
            TargetValue::Label(_) => f64::NAN,
        }).collect())
    }
}

fn check_alignment(model: &FittedModel, spec: &ProblemSpec, split: &SplitPlan) -> Result<(), EvalError> {
    if model.task_type != spec.task_type || model.target != spec.target || model.features != spec.features {
        return Err(EvalError::ModelSpecMismatch(format!(
            "model predicts `{}` ({}) from {:?}, problem asks for `{}` ({}) from {:?}",
            model.target, model.task_type, model.features, spec.target, spec.task_type, spec.features
        )));
    }
    let train: BTreeSet<RowId> = split.train_row_ids.iter().copied().collect();
    if let Some(r) = model.train_row_ids.iter().find(|r| !train.contains(r)) {
        return Err(EvalError::ModelSpecMismatch(format!("model was trained on row {r}, which is not in the training partition")));
    }
    Ok(())
}

/// Evaluate `model` on the holdout rows of `split`.
pub fn build_report(
    candidate_id: &str,
    model: &FittedModel,
    spec: &ProblemSpec,
    split: &SplitPlan,
    bundle: &DatasetBundle,
) -> Result<EvalReport, EvalError> {
    check_alignment(model, spec, split)?;
    let rows = &split.holdout_row_ids;
    if rows.is_empty() {
        return Err(EvalError::Empty);
    }
    let predicted = model.predict(bundle, rows)?;
    let times: Vec<Option<String>> = match (spec.task_type, bundle.time_column()) {
        (TaskType::Forecasting, Some(col)) => {
            let ms = col.datetime().expect("time column holds datetimes");
            rows.iter().map(|&r| render_datetime_opt(ms[r])).collect()
        }
        _ => vec![None; rows.len()],
    };
    let (per_instance, confusion) = match &predicted {
        Predictions::Labels(pred) => {
            let truth: Vec<String> = label_targets(bundle, &spec.target, rows)?
                .into_iter()
                .map(|t| t.expect("holdout rows have targets"))
                .collect();
            let labels: BTreeSet<String> = model.labels.iter().chain(&truth).chain(pred).cloned().collect();
            let confusion = ConfusionMatrix::from_pairs(labels.into_iter().collect(), &truth, pred);
            let records = rows
                .iter()
                .zip(truth)
                .zip(pred)
                .zip(times)
                .map(|(((&row_id, t), p), time)| InstanceRecord {
                    row_id,
                    truth: TargetValue::Label(t),
                    prediction: TargetValue::Label(p.clone()),
                    residual: None,
                    time,
                })
                .collect();
            (records, Some(confusion))
        }
        Predictions::Values(pred) => {
            let truth = value_targets(bundle, &spec.target, rows)?;
            let records = rows
                .iter()
                .zip(truth)
                .zip(pred)
                .zip(times)
                .map(|(((&row_id, t), &p), time)| {
                    let t = t.expect("holdout rows have targets");
                    InstanceRecord {
                        row_id,
                        truth: TargetValue::Value(t),
                        prediction: TargetValue::Value(p),
                        residual: Some(p - t),
                        time,
                    }
                })
                .collect();
            (records, None)
        }
    };
    let mut report = EvalReport {
        candidate_id: candidate_id.to_string(),
        task_type: spec.task_type,
        metric: spec.metric,
        per_instance,
        confusion,
        scores: BTreeMap::new(),
        per_class_scores: None,
        flags: split.fallback.iter().cloned().collect(),
    };
    let (truth, pred) = (report.truth(), report.predictions());
    for &m in spec.task_type.metrics() {
        report.scores.insert(m, compute_metric(m, &truth, &pred)?);
        report.flags.extend(metric_flags(m, &truth));
    }
    if let (Predictions::Labels(t), Predictions::Labels(p)) = (&truth, &pred) {
        report.per_class_scores = Some(per_class_scores(t, p));
    }
    Ok(report)
}
