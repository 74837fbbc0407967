use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use serde_with::serde_as;

use super::{SessionError, SessionState, WorkflowStep};
use crate::canonical::{sha256_hex, to_canonical_pretty, to_canonical_string};
use crate::dataset::{DatasetMetadata, RowId};
use crate::evaluation::{SplitPlan, SplitStrategy};
use crate::hexfloat::HexF64;
use crate::learners::{FittedModel, PipelineDescriptor};
use crate::problemgen::{MetricId, ProblemSpec};
use crate::search::CandidateModel;

pub const ARTIFACT_FORMAT: &str = "ema-model-artifact";
pub const CARD_FORMAT: &str = "ema-model-card";
pub const ARTIFACT_VERSION: u64 = 1;

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SplitDescription {
    pub strategy: SplitStrategy,
    pub seed: u64,
    #[serde_as(as = "HexF64")]
    pub holdout_fraction: f64,
    pub train_rows: usize,
    pub holdout_row_ids: Vec<RowId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

impl From<&SplitPlan> for SplitDescription {
    fn from(plan: &SplitPlan) -> Self {
        SplitDescription {
            strategy: plan.strategy,
            seed: plan.seed,
            holdout_fraction: plan.holdout_fraction,
            train_rows: plan.train_row_ids.len(),
            holdout_row_ids: plan.holdout_row_ids.clone(),
            fallback: plan.fallback.clone(),
        }
    }
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassScoreCard {
    #[serde_as(as = "HexF64")]
    pub precision: f64,
    #[serde_as(as = "HexF64")]
    pub recall: f64,
    #[serde_as(as = "HexF64")]
    pub f1: f64,
    pub support: usize,
}

/// Provenance document for one exported model.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelCard {
    pub candidate_id: String,
    pub user_rank: usize,
    pub search_rank: usize,
    pub spec: ProblemSpec,
    pub descriptor: PipelineDescriptor,
    #[serde_as(as = "BTreeMap<_, HexF64>")]
    pub scores: BTreeMap<MetricId, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class_scores: Option<BTreeMap<String, ClassScoreCard>>,
    #[serde_as(as = "HexF64")]
    pub cv_score: f64,
    pub split: SplitDescription,
    pub dataset_id: String,
    pub dataset: DatasetMetadata,
    /// Wall-clock fit time; only in the standalone card file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ArtifactPayload {
    model: FittedModel,
    model_card: ModelCard,
}

/// Everything needed to export one selected candidate.
#[derive(Debug, Clone)]
pub struct ExportSource {
    pub candidate: CandidateModel,
    pub spec: ProblemSpec,
    pub split: SplitPlan,
    pub dataset_id: String,
    pub dataset: DatasetMetadata,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExportRecord {
    pub candidate_id: String,
    pub user_rank: usize,
    pub artifact_path: String,
    pub card_path: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedArtifact {
    pub model: FittedModel,
    pub model_card: ModelCard,
}

pub fn artifact_file_names(user_rank: usize, candidate_id: &str) -> (String, String) {
    let stem = format!("rank{user_rank:02}-{candidate_id}");
    (format!("{stem}.artifact.json"), format!("{stem}.card.json"))
}

fn card_for(source: &ExportSource, user_rank: usize) -> ModelCard {
    let report = &source.candidate.holdout_report;
    ModelCard {
        candidate_id: source.candidate.id.clone(),
        user_rank,
        search_rank: source.candidate.rank,
        spec: source.spec.clone(),
        descriptor: source.candidate.descriptor.clone(),
        scores: report.scores.clone(),
        per_class_scores: report.per_class_scores.as_ref().map(|m| {
            m.iter()
                .map(|(k, s)| (k.clone(), ClassScoreCard { precision: s.precision, recall: s.recall, f1: s.f1, support: s.support }))
                .collect()
        }),
        cv_score: source.candidate.cv_score,
        split: SplitDescription::from(&source.split),
        dataset_id: source.dataset_id.clone(),
        dataset: source.dataset.clone(),
        training_seconds: None,
    }
}

fn artifact_text(model: &FittedModel, card: &ModelCard) -> String {
    let payload = crate::canonical::to_value(&ArtifactPayload { model: model.clone(), model_card: card.clone() });
    let checksum = format!("sha256:{}", sha256_hex(to_canonical_string(&payload).as_bytes()));
    to_canonical_pretty(&serde_json::json!({
        "format": ARTIFACT_FORMAT,
        "version": ARTIFACT_VERSION,
        "checksum": checksum,
        "payload": payload,
    }))
}

fn write(path: &Path, text: &str) -> Result<(), SessionError> {
    fs::write(path, text).map_err(|e| SessionError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Write one artifact and one card per selection into `dir`. `resolve` maps a
/// selected candidate id to its export source.
pub fn export_selected(
    state: &SessionState,
    dir: &Path,
    resolve: impl Fn(&str) -> Option<ExportSource>,
) -> Result<(SessionState, Vec<ExportRecord>), SessionError> {
    if state.selections.is_empty() {
        return Err(SessionError::EmptySelection);
    }
    state.require("exporting models", WorkflowStep::ExportModels)?;
    fs::create_dir_all(dir).map_err(|e| SessionError::Io { path: dir.display().to_string(), message: e.to_string() })?;
    let mut records = Vec::new();
    for sel in &state.selections {
        let source = resolve(&sel.candidate_id).ok_or_else(|| SessionError::UnknownCandidate(sel.candidate_id.clone()))?;
        let card = card_for(&source, sel.user_rank);
        let (artifact_name, card_name) = artifact_file_names(sel.user_rank, &sel.candidate_id);
        let artifact_path: PathBuf = dir.join(artifact_name);
        let card_path: PathBuf = dir.join(card_name);
        write(&artifact_path, &artifact_text(&source.candidate.model, &card))?;
        let full_card = ModelCard { training_seconds: Some(source.candidate.model.training_seconds), ..card };
        write(
            &card_path,
            &to_canonical_pretty(&serde_json::json!({ "format": CARD_FORMAT, "version": ARTIFACT_VERSION, "card": full_card })),
        )?;
        records.push(ExportRecord {
            candidate_id: sel.candidate_id.clone(),
            user_rank: sel.user_rank,
            artifact_path: artifact_path.display().to_string(),
            card_path: card_path.display().to_string(),
        });
    }
    let mut next = state.clone();
    next.exports.extend(records.iter().cloned());
    Ok((next, records))
}

pub fn load_artifact(path: &Path) -> Result<LoadedArtifact, SessionError> {
    let text = fs::read_to_string(path).map_err(|e| SessionError::Io { path: path.display().to_string(), message: e.to_string() })?;
    load_artifact_str(&text)
}

pub fn load_artifact_str(text: &str) -> Result<LoadedArtifact, SessionError> {
    let corrupt = |m: String| SessionError::Corrupt(m);
    let doc: Value = serde_json::from_str(text).map_err(|e| corrupt(format!("not valid JSON: {e}")))?;
    if doc.get("format").and_then(Value::as_str) != Some(ARTIFACT_FORMAT) {
        return Err(corrupt(format!("missing `format: {ARTIFACT_FORMAT}`")));
    }
    let version = doc.get("version").and_then(Value::as_u64).ok_or_else(|| corrupt("missing version".into()))?;
    if version != ARTIFACT_VERSION {
        return Err(SessionError::VersionMismatch { found: version, supported: ARTIFACT_VERSION });
    }
    let payload = doc.get("payload").ok_or_else(|| corrupt("missing payload".into()))?;
    let expected = doc.get("checksum").and_then(Value::as_str).ok_or_else(|| corrupt("missing checksum".into()))?;
    let actual = format!("sha256:{}", sha256_hex(to_canonical_string(payload).as_bytes()));
    if expected != actual {
        return Err(corrupt(format!("checksum mismatch: recorded {expected}, computed {actual}")));
    }
    let payload: ArtifactPayload = serde_json::from_value(payload.clone()).map_err(|e| corrupt(format!("payload: {e}")))?;
    Ok(LoadedArtifact { model: payload.model, model_card: payload.model_card })
}
