//! Tabular feature encoding fitted on training rows only: mean imputation,
//! z-score standardization of numeric/datetime features, and one-hot blocks
//! for categoricals (unseen or missing levels encode as all zeros).

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::{LearnError, PreprocessStep};
use crate::dataset::{Column, ColumnKind, DatasetBundle, RowId};
use crate::hexfloat::HexF64;

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "block", rename_all = "camelCase")]
pub enum FeatureBlock {
    Numeric {
        name: String,
        #[serde_as(as = "HexF64")]
        mean: f64,
        #[serde_as(as = "HexF64")]
        scale: f64,
    },
    Categorical {
        name: String,
        levels: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeatureEncoder {
    pub blocks: Vec<FeatureBlock>,
    pub mean_impute: bool,
    pub standardize: bool,
    /// Drop the first level of every categorical block (reference coding),
    /// keeping linear designs with an intercept full rank.
    pub drop_first_level: bool,
}

fn feature_column<'a>(bundle: &'a DatasetBundle, name: &str) -> Result<&'a Column, LearnError> {
    bundle.column(name).ok_or_else(|| LearnError::MissingColumn(name.to_string()))
}

impl FeatureEncoder {
    pub fn fit(
        bundle: &DatasetBundle,
        features: &[String],
        rows: &[RowId],
        steps: &[PreprocessStep],
        drop_first_level: bool,
    ) -> Result<Self, LearnError> {
        let one_hot = steps.contains(&PreprocessStep::OneHotEncode);
        let standardize = steps.contains(&PreprocessStep::Standardize);
        let mean_impute = steps.contains(&PreprocessStep::MeanImpute);
        let mut blocks = Vec::new();
        for name in features {
            let col = feature_column(bundle, name)?;
            match col.kind() {
                ColumnKind::Numeric | ColumnKind::Datetime => {
                    let values: Vec<f64> = rows.iter().filter_map(|&r| col.as_f64(r)).collect();
                    let (mean, scale) = if values.is_empty() {
                        (0.0, 1.0)
                    } else {
                        let n = values.len() as f64;
                        let mean = values.iter().sum::<f64>() / n;
                        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                        let sd = var.sqrt();
                        (mean, if sd > 0.0 && sd.is_finite() { sd } else { 1.0 })
                    };
                    blocks.push(FeatureBlock::Numeric { name: name.clone(), mean, scale });
                }
                ColumnKind::Categorical if one_hot => {
                    let text = col.text().expect("text storage");
                    let mut levels: Vec<String> = rows.iter().filter_map(|&r| text[r].clone()).collect();
                    levels.sort();
                    levels.dedup();
                    blocks.push(FeatureBlock::Categorical { name: name.clone(), levels });
                }
                _ => {}
            }
        }
        Ok(FeatureEncoder { blocks, mean_impute, standardize, drop_first_level })
    }

    pub fn width(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| match b {
                FeatureBlock::Numeric { .. } => 1,
                FeatureBlock::Categorical { levels, .. } => {
                    levels.len().saturating_sub(usize::from(self.drop_first_level))
                }
            })
            .sum()
    }

    /// Encode `rows` of `bundle` (which may be a different, schema-compatible dataset).
    pub fn encode(&self, bundle: &DatasetBundle, rows: &[RowId]) -> Result<Vec<Vec<f64>>, LearnError> {
        let cols: Vec<&Column> = self
            .blocks
            .iter()
            .map(|b| match b {
                FeatureBlock::Numeric { name, .. } | FeatureBlock::Categorical { name, .. } => {
                    feature_column(bundle, name)
                }
            })
            .collect::<Result<_, _>>()?;
        let width = self.width();
        Ok(rows
            .iter()
            .map(|&r| {
                let mut out = Vec::with_capacity(width);
                for (block, col) in self.blocks.iter().zip(&cols) {
                    match block {
                        FeatureBlock::Numeric { mean, scale, .. } => {
                            let raw = col.as_f64(r).unwrap_or(if self.mean_impute { *mean } else { 0.0 });
                            out.push(if self.standardize { (raw - mean) / scale } else { raw });
                        }
                        FeatureBlock::Categorical { levels, .. } => {
                            let skip = usize::from(self.drop_first_level);
                            let value = col.text().and_then(|t| t[r].as_deref());
                            out.extend(levels.iter().skip(skip).map(|l| {
                                if Some(l.as_str()) == value {
                                    1.0
                                } else {
                                    0.0
                                }
                            }));
                        }
                    }
                }
                out
            })
            .collect())
    }
}
