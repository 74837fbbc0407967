use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::linalg::Matrix;
use crate::hexfloat::HexF64;

/// Variance floor added to every class variance, relative to the largest
/// feature variance.
const VAR_SMOOTHING: f64 = 1e-9;

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NaiveBayesParams {
    #[serde_as(as = "Vec<HexF64>")]
    pub log_priors: Vec<f64>,
    #[serde_as(as = "Vec<Vec<HexF64>>")]
    pub means: Vec<Vec<f64>>,
    #[serde_as(as = "Vec<Vec<HexF64>>")]
    pub variances: Vec<Vec<f64>>,
}

pub fn fit(x: &Matrix, classes: &[usize], n_classes: usize) -> NaiveBayesParams {
    let d = x.cols;
    let n = x.rows as f64;
    let mut epsilon = 0.0f64;
    for j in 0..d {
        let m = (0..x.rows).map(|r| x.get(r, j)).sum::<f64>() / n;
        let v = (0..x.rows).map(|r| (x.get(r, j) - m).powi(2)).sum::<f64>() / n;
        epsilon = epsilon.max(v);
    }
    let epsilon = VAR_SMOOTHING * if epsilon > 0.0 { epsilon } else { 1.0 };

    let mut counts = vec![0.0; n_classes];
    let mut means = vec![vec![0.0; d]; n_classes];
    for (r, &c) in classes.iter().enumerate() {
        counts[c] += 1.0;
        for j in 0..d {
            means[c][j] += x.get(r, j);
        }
    }
    for c in 0..n_classes {
        for m in &mut means[c] {
            *m /= counts[c];
        }
    }
    let mut variances = vec![vec![0.0; d]; n_classes];
    for (r, &c) in classes.iter().enumerate() {
        for j in 0..d {
            variances[c][j] += (x.get(r, j) - means[c][j]).powi(2);
        }
    }
    for c in 0..n_classes {
        for v in &mut variances[c] {
            *v = *v / counts[c] + epsilon;
        }
    }
    NaiveBayesParams {
        log_priors: counts.iter().map(|&k| (k / n).ln()).collect(),
        means,
        variances,
    }
}

impl NaiveBayesParams {
    pub fn log_posterior(&self, c: usize, row: &[f64]) -> f64 {
        let mut lp = self.log_priors[c];
        for ((x, m), v) in row.iter().zip(&self.means[c]).zip(&self.variances[c]) {
            lp -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / v);
        }
        lp
    }

    /// Maximum a-posteriori class; ties go to the lowest class index.
    pub fn predict(&self, row: &[f64]) -> usize {
        let mut best = 0;
        let mut best_lp = f64::NEG_INFINITY;
        for c in 0..self.log_priors.len() {
            let lp = self.log_posterior(c, row);
            if lp > best_lp {
                best = c;
                best_lp = lp;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learns_class_statistics() {
        let x = Matrix::from_rows(&[vec![0.0], vec![2.0], vec![10.0], vec![12.0]], 1);
        let p = fit(&x, &[0, 0, 1, 1], 2);
        assert_eq!(p.means, vec![vec![1.0], vec![11.0]]);
        assert!((p.variances[0][0] - 1.0).abs() < 1e-6);
        assert_eq!(p.predict(&[1.5]), 0);
        assert_eq!(p.predict(&[9.0]), 1);
    }
}
