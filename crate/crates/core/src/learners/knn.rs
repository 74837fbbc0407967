//! Brute-force k-nearest neighbours over encoded features.
//!
//! Distance is squared Euclidean; equal distances are ordered by the lower
//! training row id. Vote ties go to the tied class whose member appears
//! first in neighbour order.

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::linalg::Matrix;
use crate::dataset::RowId;
use crate::hexfloat::HexF64;

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KnnParams {
    pub k: usize,
    #[serde_as(as = "Vec<Vec<HexF64>>")]
    pub points: Vec<Vec<f64>>,
    /// Class index (as a float) or target value per training point.
    #[serde_as(as = "Vec<HexF64>")]
    pub targets: Vec<f64>,
    pub row_ids: Vec<RowId>,
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl KnnParams {
    pub fn new(k: usize, x: &Matrix, targets: Vec<f64>, row_ids: &[RowId]) -> Self {
        KnnParams {
            k,
            points: (0..x.rows).map(|r| x.row(r).to_vec()).collect(),
            targets,
            row_ids: row_ids.to_vec(),
        }
    }

    /// Indices of the `k` nearest training points, nearest first.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let mut order: Vec<(f64, RowId, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (squared_distance(p, query), self.row_ids[i], i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order.into_iter().take(self.k.max(1)).map(|(_, _, i)| i).collect()
    }

    pub fn classify(&self, query: &[f64], classes: usize) -> usize {
        let neighbors = self.neighbors(query);
        let mut counts = vec![0usize; classes];
        for &i in &neighbors {
            counts[self.targets[i] as usize] += 1;
        }
        let top = *counts.iter().max().unwrap_or(&0);
        neighbors
            .iter()
            .map(|&i| self.targets[i] as usize)
            .find(|&c| counts[c] == top)
            .unwrap_or(0)
    }

    pub fn regress(&self, query: &[f64]) -> f64 {
        let neighbors = self.neighbors(query);
        neighbors.iter().map(|&i| self.targets[i]).sum::<f64>() / neighbors.len() as f64
    }
}
