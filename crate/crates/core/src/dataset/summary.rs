use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{render_datetime_opt, Column, ColumnKind, DatasetBundle, DatasetError, RowId};

pub const DEFAULT_BIN_COUNT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FrequencyEntry {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum SummaryDetail {
    Histogram {
        edges: Vec<f64>,
        counts: Vec<usize>,
    },
    Frequencies {
        entries: Vec<FrequencyEntry>,
    },
    /// Datetime columns: span plus a histogram over epoch milliseconds.
    Span {
        min: Option<String>,
        max: Option<String>,
        edges: Vec<f64>,
        counts: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ColumnSummary {
    pub name: String,
    pub kind: ColumnKind,
    pub missing: usize,
    pub detail: SummaryDetail,
}

impl ColumnSummary {
    /// Sum of bin or frequency counts.
    pub fn counted(&self) -> usize {
        match &self.detail {
            SummaryDetail::Histogram { counts, .. } | SummaryDetail::Span { counts, .. } => {
                counts.iter().sum()
            }
            SummaryDetail::Frequencies { entries } => entries.iter().map(|e| e.count).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetSummary {
    pub dataset_id: String,
    pub row_count: usize,
    pub bin_count: usize,
    pub columns: Vec<ColumnSummary>,
}

/// Equal-width edges over `[min, max]`; a zero-width range is widened by ±0.5.
/// Returns `binCount + 1` edges.
pub fn bin_edges(min: f64, max: f64, bin_count: usize) -> Vec<f64> {
    let (lo, hi) = if max > min { (min, max) } else { (min - 0.5, max + 0.5) };
    let width = (hi - lo) / bin_count as f64;
    let mut edges: Vec<f64> = (0..bin_count).map(|i| lo + width * i as f64).collect();
    edges.push(hi);
    edges
}

/// Bin of `value` under `edges`: right-open, except the last bin which is
/// right-closed. `None` when outside `[first, last]`.
pub fn bin_index(edges: &[f64], value: f64) -> Option<usize> {
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    if !(lo..=hi).contains(&value) {
        return None;
    }
    if value == hi {
        return Some(bins - 1);
    }
    // Edge array lookup keeps the result consistent with the published edges.
    let idx = edges.partition_point(|&e| e <= value);
    Some(idx.saturating_sub(1).min(bins - 1))
}

fn numeric_values(column: &Column) -> Vec<(RowId, f64)> {
    (0..column.values.len())
        .filter_map(|r| column.as_f64_raw(r).map(|v| (r, v)))
        .collect()
}

fn histogram(column: &Column, bin_count: usize) -> (Vec<f64>, Vec<usize>) {
    let values = numeric_values(column);
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
    if values.is_empty() {
        return (bin_edges(0.0, 0.0, bin_count), vec![0; bin_count]);
    }
    let edges = bin_edges(min, max, bin_count);
    let mut counts = vec![0; bin_count];
    for (_, v) in values {
        counts[bin_index(&edges, v).expect("value within its own range")] += 1;
    }
    (edges, counts)
}

fn column_edges(column: &Column, bin_count: usize) -> Vec<f64> {
    histogram(column, bin_count).0
}

pub fn summarize(bundle: &DatasetBundle, bin_count: usize) -> DatasetSummary {
    let bin_count = bin_count.max(1);
    let columns = bundle
        .columns()
        .iter()
        .map(|col| {
            let detail = match col.kind() {
                ColumnKind::Numeric => {
                    let (edges, counts) = histogram(col, bin_count);
                    SummaryDetail::Histogram { edges, counts }
                }
                ColumnKind::Datetime => {
                    let (edges, counts) = histogram(col, bin_count);
                    let stamps = col.datetime().expect("datetime storage");
                    SummaryDetail::Span {
                        min: render_datetime_opt(stamps.iter().flatten().min().copied()),
                        max: render_datetime_opt(stamps.iter().flatten().max().copied()),
                        edges,
                        counts,
                    }
                }
                _ => {
                    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
                    for label in col.text().expect("text storage").iter().flatten() {
                        *freq.entry(label.as_str()).or_default() += 1;
                    }
                    SummaryDetail::Frequencies {
                        entries: freq
                            .into_iter()
                            .map(|(label, count)| FrequencyEntry { label: label.to_string(), count })
                            .collect(),
                    }
                }
            };
            ColumnSummary {
                name: col.name().to_string(),
                kind: col.kind(),
                missing: col.values.missing_count(),
                detail,
            }
        })
        .collect();
    DatasetSummary {
        dataset_id: bundle.id().to_string(),
        row_count: bundle.row_count(),
        bin_count,
        columns,
    }
}

/// Cross-link selector: a histogram bin (under a given bin count) or an exact label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RowSelector {
    pub column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl RowSelector {
    pub fn label(column: &str, label: &str) -> Self {
        RowSelector { column: column.into(), bin_index: None, bin_count: None, label: Some(label.into()) }
    }

    pub fn bin(column: &str, bin_index: usize, bin_count: usize) -> Self {
        RowSelector { column: column.into(), bin_index: Some(bin_index), bin_count: Some(bin_count), label: None }
    }
}

/// Row ids whose value falls in the selected bin or equals the selected label.
/// Missing values match nothing.
pub fn rows_matching(bundle: &DatasetBundle, selector: &RowSelector) -> Result<BTreeSet<RowId>, DatasetError> {
    let column = bundle
        .column(&selector.column)
        .ok_or_else(|| DatasetError::UnknownColumn(selector.column.clone()))?;
    let kind_error = || DatasetError::SelectorKind {
        column: column.name().to_string(),
        kind: column.kind().as_str(),
    };
    match (column.kind(), &selector.label, selector.bin_index) {
        (ColumnKind::Numeric | ColumnKind::Datetime, None, Some(index)) => {
            let bin_count = selector.bin_count.unwrap_or(DEFAULT_BIN_COUNT).max(1);
            if index >= bin_count {
                return Err(DatasetError::BinOutOfRange { index, bin_count });
            }
            let edges = column_edges(column, bin_count);
            Ok(numeric_values(column)
                .into_iter()
                .filter(|&(_, v)| bin_index(&edges, v) == Some(index))
                .map(|(r, _)| r)
                .collect())
        }
        (ColumnKind::Numeric | ColumnKind::Datetime, _, _) => Err(kind_error()),
        (_, Some(label), None) => {
            let values = column.text().expect("text storage");
            Ok(values
                .iter()
                .enumerate()
                .filter(|(_, v)| v.as_deref() == Some(label.as_str()))
                .map(|(r, _)| r)
                .collect())
        }
        _ => Err(kind_error()),
    }
}
