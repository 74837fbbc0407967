//! Univariate forecasters over the training series (row order = time order).

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::linalg::{lstsq, Matrix};
use super::{FamilyId, LearnError};
use crate::hexfloat::HexF64;

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "camelCase")]
pub enum ForecastParams {
    NaiveLast {
        #[serde_as(as = "HexF64")]
        last: f64,
    },
    SeasonalNaive {
        /// The final `period` observations, oldest first.
        #[serde_as(as = "Vec<HexF64>")]
        season: Vec<f64>,
    },
    /// `x_t = intercept + Σ_k coefficients[k] · x_{t-1-k}`
    Autoregressive {
        #[serde_as(as = "HexF64")]
        intercept: f64,
        #[serde_as(as = "Vec<HexF64>")]
        coefficients: Vec<f64>,
        /// The final `p` observations, oldest first.
        #[serde_as(as = "Vec<HexF64>")]
        history: Vec<f64>,
    },
}

impl ForecastParams {
    pub fn naive_last(series: &[f64]) -> Self {
        ForecastParams::NaiveLast { last: *series.last().expect("non-empty training series") }
    }

    pub fn seasonal_naive(series: &[f64], period: usize) -> Result<Self, LearnError> {
        if period == 0 || series.len() < period {
            return Err(LearnError::InsufficientHistory { needed: period.max(1), got: series.len() });
        }
        Ok(ForecastParams::SeasonalNaive { season: series[series.len() - period..].to_vec() })
    }

    /// Least-squares AR(p) with intercept, solved by QR.
    pub fn autoregressive(series: &[f64], p: usize) -> Result<Self, LearnError> {
        let needed = 2 * p + 1;
        if p == 0 || series.len() < needed {
            return Err(LearnError::InsufficientHistory { needed, got: series.len() });
        }
        let rows: Vec<Vec<f64>> = (p..series.len())
            .map(|t| std::iter::once(1.0).chain((1..=p).map(|k| series[t - k])).collect())
            .collect();
        let y = &series[p..];
        let solution = lstsq(&Matrix::from_rows(&rows, p + 1), y)
            .map_err(|_| LearnError::Singular { family: FamilyId::Autoregressive })?;
        Ok(ForecastParams::Autoregressive {
            intercept: solution[0],
            coefficients: solution[1..].to_vec(),
            history: series[series.len() - p..].to_vec(),
        })
    }

    /// The 1..=horizon step-ahead forecasts (recursive for AR).
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        match self {
            ForecastParams::NaiveLast { last } => vec![*last; horizon],
            ForecastParams::SeasonalNaive { season } => (0..horizon).map(|i| season[i % season.len()]).collect(),
            ForecastParams::Autoregressive { intercept, coefficients, history } => {
                let p = coefficients.len();
                let mut window = history.clone();
                let mut out = Vec::with_capacity(horizon);
                for _ in 0..horizon {
                    let n = window.len();
                    let next = intercept + (0..p).map(|k| coefficients[k] * window[n - 1 - k]).sum::<f64>();
                    window.push(next);
                    out.push(next);
                }
                out
            }
        }
    }
}
