//! Holdout splitting, metrics and per-candidate evaluation reports.

mod metrics;
mod report;
mod split;

pub use metrics::{compute_metric, metric_flags, per_class_scores, ClassScores};
pub use report::{build_report, ConfusionMatrix, EvalReport, InstanceRecord, TargetValue};
pub use split::{cv_folds, make_split, usable_rows, Fold, SplitPlan, SplitStrategy, DEFAULT_HOLDOUT_FRACTION, MIN_USABLE_ROWS};

use crate::learners::LearnError;
use crate::problemgen::MetricId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("truth has {truth} entries but predictions have {predictions}")]
    LengthMismatch { truth: usize, predictions: usize },
    #[error("cannot score an empty set of instances")]
    Empty,
    #[error("need at least {needed} usable rows, have {got}")]
    TooFewRows { got: usize, needed: usize },
    #[error("holdout fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("truth and predictions are of different kinds")]
    KindMismatch,
    #[error("metric {metric} does not apply to {kind}")]
    MetricKind { metric: MetricId, kind: &'static str },
    #[error("model does not match problem: {0}")]
    ModelSpecMismatch(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
}
