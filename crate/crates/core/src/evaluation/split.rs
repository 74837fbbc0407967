use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::dataset::{DatasetBundle, RowId};
use crate::learners::label_targets;
use crate::problemgen::{ProblemSpec, TaskType};

pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.25;
pub const MIN_USABLE_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SplitStrategy {
    Stratified,
    Shuffled,
    TemporalTail,
}

impl SplitStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitStrategy::Stratified => "stratified",
            SplitStrategy::Shuffled => "shuffled",
            SplitStrategy::TemporalTail => "temporalTail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SplitPlan {
    pub seed: u64,
    pub strategy: SplitStrategy,
    pub holdout_fraction: f64,
    /// Sorted ascending.
    pub train_row_ids: Vec<RowId>,
    /// Sorted ascending.
    pub holdout_row_ids: Vec<RowId>,
    /// Set when the requested strategy could not be applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

/// Rows whose target is present, ascending.
pub fn usable_rows(bundle: &DatasetBundle, spec: &ProblemSpec) -> Result<Vec<RowId>, EvalError> {
    let col = bundle
        .column(&spec.target)
        .ok_or_else(|| EvalError::ModelSpecMismatch(format!("target `{}` not in dataset", spec.target)))?;
    Ok(bundle.row_ids().filter(|&r| !col.values.is_missing(r)).collect())
}

fn holdout_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).clamp(1, n - 1)
}

/// Usable rows grouped by label, labels sorted.
fn by_label(bundle: &DatasetBundle, spec: &ProblemSpec, rows: &[RowId]) -> Result<BTreeMap<String, Vec<RowId>>, EvalError> {
    let labels = label_targets(bundle, &spec.target, rows)?;
    let mut groups: BTreeMap<String, Vec<RowId>> = BTreeMap::new();
    for (&r, l) in rows.iter().zip(labels) {
        groups.entry(l.expect("usable rows have targets")).or_default().push(r);
    }
    Ok(groups)
}

/// Train/holdout partition: stratified by label for classification, seeded
/// shuffle for regression and collaborative filtering, time-ordered tail for
/// forecasting.
pub fn make_split(bundle: &DatasetBundle, spec: &ProblemSpec, seed: u64, holdout_fraction: f64) -> Result<SplitPlan, EvalError> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(EvalError::BadFraction(holdout_fraction));
    }
    let rows = usable_rows(bundle, spec)?;
    if rows.len() < MIN_USABLE_ROWS {
        return Err(EvalError::TooFewRows { got: rows.len(), needed: MIN_USABLE_ROWS });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fallback = None;
    let (strategy, mut train, mut holdout) = match spec.task_type {
        TaskType::Forecasting => {
            let cut = rows.len() - holdout_count(rows.len(), holdout_fraction);
            (SplitStrategy::TemporalTail, rows[..cut].to_vec(), rows[cut..].to_vec())
        }
        TaskType::Classification => {
            let groups = by_label(bundle, spec, &rows)?;
            if let Some((label, members)) = groups.iter().find(|(_, m)| m.len() < 2) {
                fallback = Some(format!(
                    "class `{label}` has {} instance(s); stratification fell back to shuffled",
                    members.len()
                ));
                let (t, h) = shuffled(rows, holdout_fraction, &mut rng);
                (SplitStrategy::Shuffled, t, h)
            } else {
                let (mut train, mut holdout) = (Vec::new(), Vec::new());
                for (_, mut members) in groups {
                    members.shuffle(&mut rng);
                    let k = ((members.len() as f64 * holdout_fraction).round() as usize).min(members.len() - 1);
                    holdout.extend_from_slice(&members[..k]);
                    train.extend_from_slice(&members[k..]);
                }
                (SplitStrategy::Stratified, train, holdout)
            }
        }
        TaskType::Regression | TaskType::CollaborativeFiltering => {
            let (t, h) = shuffled(rows, holdout_fraction, &mut rng);
            (SplitStrategy::Shuffled, t, h)
        }
    };
    train.sort_unstable();
    holdout.sort_unstable();
    Ok(SplitPlan { seed, strategy, holdout_fraction, train_row_ids: train, holdout_row_ids: holdout, fallback })
}

fn shuffled(mut rows: Vec<RowId>, fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<RowId>, Vec<RowId>) {
    rows.shuffle(rng);
    let k = holdout_count(rows.len(), fraction);
    let holdout = rows[..k].to_vec();
    (rows[k..].to_vec(), holdout)
}

/// One (fit rows, validation rows) pair of internal cross-validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub fit: Vec<RowId>,
    pub validate: Vec<RowId>,
}

/// `k` folds over the training partition: stratified for classification,
/// shuffled for regression/collaborative filtering, rolling origin for
/// forecasting (fold `i` fits on a growing prefix and validates on the next block).
pub fn cv_folds(bundle: &DatasetBundle, spec: &ProblemSpec, train: &[RowId], seed: u64, k: usize) -> Result<Vec<Fold>, EvalError> {
    let mut train = train.to_vec();
    train.sort_unstable();
    if train.len() < 2 * k {
        return Err(EvalError::TooFewRows { got: train.len(), needed: 2 * k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let assign = |groups: Vec<Vec<RowId>>, rng: &mut ChaCha8Rng| {
        let mut buckets = vec![Vec::new(); k];
        let mut next = 0;
        for mut g in groups {
            g.shuffle(rng);
            for r in g {
                buckets[next % k].push(r);
                next += 1;
            }
        }
        buckets
    };
    let buckets = match spec.task_type {
        TaskType::Forecasting => {
            let n = train.len();
            let block = n / (k + 1);
            return Ok((0..k)
                .map(|i| {
                    let end = n - (k - i) * block;
                    Fold { fit: train[..end].to_vec(), validate: train[end..end + block].to_vec() }
                })
                .collect());
        }
        TaskType::Classification => assign(by_label(bundle, spec, &train)?.into_values().collect(), &mut rng),
        _ => assign(vec![train.clone()], &mut rng),
    };
    Ok((0..k)
        .map(|i| {
            let mut validate = buckets[i].clone();
            validate.sort_unstable();
            let mut fit: Vec<RowId> = buckets.iter().enumerate().filter(|(j, _)| *j != i).flat_map(|(_, b)| b.clone()).collect();
            fit.sort_unstable();
            Fold { fit, validate }
        })
        .collect())
}
