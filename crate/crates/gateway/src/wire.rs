//! Request and response bodies shared by the HTTP API and the CLI's `--json` output.

use std::collections::BTreeMap;

use ema_core::dataset::{ColumnSchema, DatasetBundle, DatasetMetadata, ResourceShape, RowId, SchemaDoc};
use ema_core::evaluation::SplitPlan;
use ema_core::learners::PipelineDescriptor;
use ema_core::problemgen::{MetricId, ProblemSpec, TaskType};
use ema_core::search::{CandidateModel, ConfigFailure, SearchOutcome, SearchStatus};
use ema_core::session::{ExportRecord, SessionState, WorkflowEvent};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UploadDataset {
    pub csv: String,
    pub schema: SchemaDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetInfo {
    pub dataset_id: String,
    pub row_count: usize,
    pub shape: ResourceShape,
    pub metadata: DatasetMetadata,
    pub columns: Vec<ColumnSchema>,
}

impl From<&DatasetBundle> for DatasetInfo {
    fn from(b: &DatasetBundle) -> Self {
        DatasetInfo {
            dataset_id: b.id().to_string(),
            row_count: b.row_count(),
            shape: b.shape(),
            metadata: b.metadata().clone(),
            columns: b.columns().iter().map(|c| c.schema.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetList {
    pub datasets: Vec<DatasetInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RowSet {
    pub dataset_id: String,
    pub row_ids: Vec<RowId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TableRow {
    pub row_id: RowId,
    pub values: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TablePage {
    pub dataset_id: String,
    pub columns: Vec<String>,
    pub total: usize,
    pub offset: usize,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpecList {
    pub dataset_id: String,
    pub specs: Vec<ProblemSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreateSpec {
    pub dataset_id: String,
    pub task_type: TaskType,
    pub target: String,
    pub features: Vec<String>,
    pub metric: MetricId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubmitSearch {
    pub spec_id: String,
    pub budget: usize,
    pub top_k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub holdout_fraction: Option<f64>,
    #[serde(default)]
    pub session_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchSubmitted {
    pub search_id: String,
    pub status: SearchStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<SessionState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CandidateSummary {
    pub id: String,
    pub rank: usize,
    pub label: String,
    pub descriptor: PipelineDescriptor,
    pub cv_score: f64,
    pub score: f64,
    pub scores: BTreeMap<MetricId, f64>,
}

impl From<(&CandidateModel, MetricId)> for CandidateSummary {
    fn from((c, metric): (&CandidateModel, MetricId)) -> Self {
        CandidateSummary {
            id: c.id.clone(),
            rank: c.rank,
            label: c.descriptor.label(),
            descriptor: c.descriptor.clone(),
            cv_score: c.cv_score,
            score: c.holdout_report.scores[&metric],
            scores: c.holdout_report.scores.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CandidateList {
    pub search_id: String,
    pub spec_id: String,
    pub metric: MetricId,
    pub split: SplitPlan,
    pub total: usize,
    pub returned: usize,
    pub retained: usize,
    pub offset: usize,
    pub candidates: Vec<CandidateSummary>,
    pub failures: Vec<ConfigFailure>,
}

impl CandidateList {
    /// Without paging arguments this is the ranked top-k.
    pub fn from_outcome(o: &SearchOutcome, offset: Option<usize>, limit: Option<usize>) -> Self {
        let offset = offset.unwrap_or(0).min(o.candidates.len());
        let limit = limit.unwrap_or(if offset == 0 { o.returned } else { o.candidates.len() });
        CandidateList {
            search_id: o.search_id.clone(),
            spec_id: o.request.spec_id.clone(),
            metric: o.metric,
            split: o.split.clone(),
            total: o.total,
            returned: o.returned,
            retained: o.candidates.len(),
            offset,
            candidates: o.candidates[offset..].iter().take(limit).map(|c| CandidateSummary::from((c, o.metric))).collect(),
            failures: o.failures.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreateSession {
    pub dataset_id: String,
    #[serde(default)]
    pub session_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AdvanceSession {
    pub event: WorkflowEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SetActiveSpec {
    pub spec_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectCandidates {
    pub candidate_ids: Vec<String>,
    pub user_ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExportResult {
    pub session: SessionState,
    pub exports: Vec<ExportRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Health {
    pub status: String,
    pub datasets: usize,
    pub searches: usize,
    pub sessions: usize,
}

/// CLI `search` output: the session it ran in plus the API's status and candidate list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchRun {
    pub session: SessionState,
    pub status: SearchStatus,
    pub candidates: CandidateList,
}
