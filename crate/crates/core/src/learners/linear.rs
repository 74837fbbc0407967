use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::linalg::{cholesky_solve, Matrix, Singular};
use crate::hexfloat::HexF64;

/// Ridge regression with an unpenalized intercept, in encoded feature space.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RidgeParams {
    #[serde_as(as = "HexF64")]
    pub intercept: f64,
    #[serde_as(as = "Vec<HexF64>")]
    pub coefficients: Vec<f64>,
}

/// Solves `(XcᵀXc + λI) β = Xcᵀ yc` on centered data; intercept = ȳ − x̄·β.
pub fn fit(x: &Matrix, y: &[f64], lambda: f64) -> Result<RidgeParams, Singular> {
    let (n, d) = (x.rows, x.cols);
    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let x_mean: Vec<f64> = (0..d).map(|j| (0..n).map(|r| x.get(r, j)).sum::<f64>() / nf).collect();
    if d == 0 {
        return Ok(RidgeParams { intercept: y_mean, coefficients: Vec::new() });
    }
    let mut gram = Matrix::zeros(d, d);
    let mut rhs = vec![0.0; d];
    for r in 0..n {
        let row: Vec<f64> = (0..d).map(|j| x.get(r, j) - x_mean[j]).collect();
        let yc = y[r] - y_mean;
        for i in 0..d {
            rhs[i] += row[i] * yc;
            for j in i..d {
                gram.data[i * d + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            gram.data[i * d + j] = gram.data[j * d + i];
        }
        gram.data[i * d + i] += lambda;
    }
    let beta = cholesky_solve(&gram, &rhs)?;
    let intercept = y_mean - x_mean.iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>();
    Ok(RidgeParams { intercept, coefficients: beta })
}

impl RidgeParams {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum::<f64>()
    }
}
