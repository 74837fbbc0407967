//! Metric definitions over truth/prediction vectors.
//!
//! Macro-averaged classification metrics average per-class values without
//! weighting over the union of true and predicted labels; a class that is
//! never predicted has precision 0, and 0/0 ratios are 0.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::learners::Predictions;
use crate::problemgen::MetricId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn per_class_scores(truth: &[String], pred: &[String]) -> BTreeMap<String, ClassScores> {
    let labels: BTreeSet<&String> = truth.iter().chain(pred).collect();
    labels
        .into_iter()
        .map(|label| {
            let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
            for (t, p) in truth.iter().zip(pred) {
                match (t == label, p == label) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    _ => {}
                }
            }
            let precision = ratio(tp as f64, (tp + fp) as f64);
            let recall = ratio(tp as f64, (tp + fn_) as f64);
            let f1 = ratio(2.0 * precision * recall, precision + recall);
            (label.clone(), ClassScores { precision, recall, f1, support: tp + fn_ })
        })
        .collect()
}

fn macro_average(scores: &BTreeMap<String, ClassScores>, pick: impl Fn(&ClassScores) -> f64) -> f64 {
    scores.values().map(pick).sum::<f64>() / scores.len() as f64
}

fn residuals(truth: &[f64], pred: &[f64]) -> Vec<f64> {
    pred.iter().zip(truth).map(|(p, t)| p - t).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check(truth: &Predictions, pred: &Predictions) -> Result<(), EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch { truth: truth.len(), predictions: pred.len() });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

/// r² with constant truth is defined as 0.
fn r2(truth: &[f64], pred: &[f64]) -> f64 {
    let m = mean(truth);
    let ss_tot: f64 = truth.iter().map(|t| (t - m).powi(2)).sum();
    if ss_tot == 0.0 {
        return 0.0;
    }
    let ss_res: f64 = residuals(truth, pred).iter().map(|r| r * r).sum();
    1.0 - ss_res / ss_tot
}

/// Mean absolute percentage error (in percent) over points with non-zero truth.
fn mape(truth: &[f64], pred: &[f64]) -> f64 {
    let terms: Vec<f64> = truth
        .iter()
        .zip(pred)
        .filter(|(t, _)| **t != 0.0)
        .map(|(t, p)| ((p - t) / t).abs())
        .collect();
    if terms.is_empty() {
        0.0
    } else {
        100.0 * mean(&terms)
    }
}

pub fn compute_metric(metric: MetricId, truth: &Predictions, pred: &Predictions) -> Result<f64, EvalError> {
    check(truth, pred)?;
    match (truth, pred) {
        (Predictions::Labels(t), Predictions::Labels(p)) => {
            let scores = || per_class_scores(t, p);
            Ok(match metric {
                MetricId::Accuracy => t.iter().zip(p).filter(|(a, b)| a == b).count() as f64 / t.len() as f64,
                MetricId::PrecisionMacro => macro_average(&scores(), |s| s.precision),
                MetricId::RecallMacro => macro_average(&scores(), |s| s.recall),
                MetricId::F1Macro => macro_average(&scores(), |s| s.f1),
                m => return Err(EvalError::MetricKind { metric: m, kind: "labels" }),
            })
        }
        (Predictions::Values(t), Predictions::Values(p)) => {
            let r = residuals(t, p);
            Ok(match metric {
                MetricId::Mse => mean(&r.iter().map(|x| x * x).collect::<Vec<_>>()),
                MetricId::Rmse => mean(&r.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt(),
                MetricId::Mae => mean(&r.iter().map(|x| x.abs()).collect::<Vec<_>>()),
                MetricId::R2 => r2(t, p),
                MetricId::Mape => mape(t, p),
                m => return Err(EvalError::MetricKind { metric: m, kind: "values" }),
            })
        }
        _ => Err(EvalError::KindMismatch),
    }
}

/// Notes about degenerate metric definitions that applied to this data.
pub fn metric_flags(metric: MetricId, truth: &Predictions) -> Option<String> {
    let values = truth.values()?;
    match metric {
        MetricId::R2 if values.iter().all(|v| *v == values[0]) => {
            Some("r2: constant truth on holdout, defined as 0".to_string())
        }
        MetricId::Mape => {
            let skipped = values.iter().filter(|v| **v == 0.0).count();
            (skipped > 0).then(|| format!("mape: skipped {skipped} zero-valued truth point(s)"))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[&str]) -> Predictions {
        Predictions::Labels(v.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn perfect_predictor() {
        let t = labels(&["a", "b", "a"]);
        for m in [MetricId::Accuracy, MetricId::F1Macro, MetricId::PrecisionMacro, MetricId::RecallMacro] {
            assert_eq!(compute_metric(m, &t, &t).unwrap(), 1.0);
        }
        let v = Predictions::Values(vec![1.0, 2.0, 4.0]);
        assert_eq!(compute_metric(MetricId::Mse, &v, &v).unwrap(), 0.0);
        assert_eq!(compute_metric(MetricId::R2, &v, &v).unwrap(), 1.0);
    }

    #[test]
    fn unit_residuals() {
        let t = Predictions::Values(vec![0.0, 0.0]);
        let p = Predictions::Values(vec![1.0, -1.0]);
        assert_eq!(compute_metric(MetricId::Rmse, &t, &p).unwrap(), 1.0);
        assert_eq!(compute_metric(MetricId::Mae, &t, &p).unwrap(), 1.0);
        assert_eq!(compute_metric(MetricId::Mse, &t, &p).unwrap(), 1.0);
    }

    #[test]
    fn two_class_counts_match_hand_formula() {
        // positive class: TP=2 FP=1 FN=1 TN=6
        let mut t = vec![];
        let mut p = vec![];
        for (tt, pp, n) in [("pos", "pos", 2), ("neg", "pos", 1), ("pos", "neg", 1), ("neg", "neg", 6)] {
            for _ in 0..n {
                t.push(tt);
                p.push(pp);
            }
        }
        let (t, p) = (labels(&t), labels(&p));
        // pos: P = 2/3, R = 2/3, F1 = 2/3 ; neg: P = 6/7, R = 6/7, F1 = 6/7
        let expected = (2.0 / 3.0 + 6.0 / 7.0) / 2.0;
        assert!((compute_metric(MetricId::F1Macro, &t, &p).unwrap() - expected).abs() < 1e-12);
        assert!((compute_metric(MetricId::PrecisionMacro, &t, &p).unwrap() - expected).abs() < 1e-12);
        assert_eq!(compute_metric(MetricId::Accuracy, &t, &p).unwrap(), 0.8);
    }

    #[test]
    fn never_predicted_class_contributes_zero_precision() {
        let t = labels(&["a", "b", "b"]);
        let p = labels(&["b", "b", "b"]);
        let s = per_class_scores(t.labels().unwrap(), p.labels().unwrap());
        assert_eq!(s["a"].precision, 0.0);
        assert_eq!(s["a"].recall, 0.0);
        assert_eq!(compute_metric(MetricId::PrecisionMacro, &t, &p).unwrap(), (0.0 + 2.0 / 3.0) / 2.0);
    }

    #[test]
    fn errors() {
        let a = labels(&["a"]);
        let b = labels(&["a", "b"]);
        assert_eq!(
            compute_metric(MetricId::Accuracy, &a, &b),
            Err(EvalError::LengthMismatch { truth: 1, predictions: 2 })
        );
        assert_eq!(compute_metric(MetricId::Accuracy, &labels(&[]), &labels(&[])), Err(EvalError::Empty));
        assert_eq!(compute_metric(MetricId::Mse, &a, &a), Err(EvalError::MetricKind { metric: MetricId::Mse, kind: "labels" }));
        assert_eq!(compute_metric(MetricId::Mse, &a, &Predictions::Values(vec![1.0])), Err(EvalError::KindMismatch));
    }

    #[test]
    fn degenerate_definitions_flagged() {
        let t = Predictions::Values(vec![2.0, 2.0]);
        let p = Predictions::Values(vec![1.0, 3.0]);
        assert_eq!(compute_metric(MetricId::R2, &t, &p).unwrap(), 0.0);
        assert!(metric_flags(MetricId::R2, &t).is_some());
        let t = Predictions::Values(vec![0.0, 2.0]);
        let p = Predictions::Values(vec![5.0, 3.0]);
        assert_eq!(compute_metric(MetricId::Mape, &t, &p).unwrap(), 50.0);
        assert_eq!(metric_flags(MetricId::Mape, &t).unwrap(), "mape: skipped 1 zero-valued truth point(s)");
    }
}
