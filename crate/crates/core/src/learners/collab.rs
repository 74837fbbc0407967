//! Baseline-bias collaborative filtering: rating ≈ μ + b_user + b_item.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::LearnError;
use crate::dataset::{DatasetBundle, RowId};
use crate::hexfloat::HexF64;

pub const SWEEPS: usize = 20;

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BiasParams {
    #[serde_as(as = "HexF64")]
    pub mu: f64,
    #[serde_as(as = "BTreeMap<_, HexF64>")]
    pub users: BTreeMap<String, f64>,
    #[serde_as(as = "BTreeMap<_, HexF64>")]
    pub items: BTreeMap<String, f64>,
}

type Keys = Vec<Option<String>>;

/// User and item keys (first and second feature) of `rows`.
pub fn keys(bundle: &DatasetBundle, features: &[String], rows: &[RowId]) -> Result<(Keys, Keys), LearnError> {
    let column = |i: usize| -> Result<Keys, LearnError> {
        let name = features.get(i).ok_or_else(|| LearnError::MissingColumn(format!("feature #{i}")))?;
        let col = bundle.column(name).ok_or_else(|| LearnError::MissingColumn(name.clone()))?;
        let text = col.text().ok_or(LearnError::TargetKind { column: name.clone(), expected: "categorical" })?;
        Ok(rows.iter().map(|&r| text[r].clone()).collect())
    };
    Ok((column(0)?, column(1)?))
}

/// Ridge-regularized alternating updates, users then items, for [`SWEEPS`] sweeps.
pub fn fit(users: &[Option<String>], items: &[Option<String>], ratings: &[f64], lambda: f64) -> BiasParams {
    let mu = ratings.iter().sum::<f64>() / ratings.len() as f64;
    let mut user_bias: BTreeMap<String, f64> = users.iter().flatten().map(|u| (u.clone(), 0.0)).collect();
    let mut item_bias: BTreeMap<String, f64> = items.iter().flatten().map(|i| (i.clone(), 0.0)).collect();
    let lookup = |m: &BTreeMap<String, f64>, k: &Option<String>| k.as_ref().and_then(|k| m.get(k)).copied().unwrap_or(0.0);
    for _ in 0..SWEEPS {
        let mut acc: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        for ((u, i), r) in users.iter().zip(items).zip(ratings) {
            if let Some(u) = u {
                let e = acc.entry(u.as_str()).or_default();
                e.0 += r - mu - lookup(&item_bias, i);
                e.1 += 1.0;
            }
        }
        for (u, (s, n)) in acc {
            user_bias.insert(u.to_string(), s / (lambda + n));
        }
        let mut acc: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        for ((u, i), r) in users.iter().zip(items).zip(ratings) {
            if let Some(i) = i {
                let e = acc.entry(i.as_str()).or_default();
                e.0 += r - mu - lookup(&user_bias, u);
                e.1 += 1.0;
            }
        }
        for (i, (s, n)) in acc {
            item_bias.insert(i.to_string(), s / (lambda + n));
        }
    }
    BiasParams { mu, users: user_bias, items: item_bias }
}

impl BiasParams {
    /// Unknown or missing users/items contribute zero bias.
    pub fn predict(&self, user: Option<&str>, item: Option<&str>) -> f64 {
        let bu = user.and_then(|u| self.users.get(u)).copied().unwrap_or(0.0);
        let bi = item.and_then(|i| self.items.get(i)).copied().unwrap_or(0.0);
        self.mu + bu + bi
    }
}
