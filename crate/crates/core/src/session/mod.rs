//! Workflow state machine, model selection and export.

mod export;
mod store;

pub use export::{
    artifact_file_names, export_selected, load_artifact, load_artifact_str, ExportRecord, ExportSource, LoadedArtifact,
    ModelCard, SplitDescription, ARTIFACT_FORMAT, ARTIFACT_VERSION, CARD_FORMAT,
};
pub use store::{SessionStore, SESSION_FORMAT, SESSION_VERSION};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum WorkflowStep {
    DataExploration,
    ProblemExploration,
    ProblemSpecification,
    ModelTraining,
    ModelExploration,
    ModelSelection,
    ExportModels,
}

impl WorkflowStep {
    pub const ALL: [WorkflowStep; 7] = [
        WorkflowStep::DataExploration,
        WorkflowStep::ProblemExploration,
        WorkflowStep::ProblemSpecification,
        WorkflowStep::ModelTraining,
        WorkflowStep::ModelExploration,
        WorkflowStep::ModelSelection,
        WorkflowStep::ExportModels,
    ];

    /// 1-based position in the workflow.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WorkflowStep::DataExploration => "dataExploration",
            WorkflowStep::ProblemExploration => "problemExploration",
            WorkflowStep::ProblemSpecification => "problemSpecification",
            WorkflowStep::ModelTraining => "modelTraining",
            WorkflowStep::ModelExploration => "modelExploration",
            WorkflowStep::ModelSelection => "modelSelection",
            WorkflowStep::ExportModels => "exportModels",
        }
    }
}

impl fmt::Display for WorkflowStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.number(), self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum WorkflowEvent {
    ExploreProblems,
    BackToData,
    SpecifyProblem,
    StartTraining,
    ExploreModels,
    SelectModels,
    ExportModels,
    RetryProblem,
}

impl WorkflowEvent {
    pub const ALL: [WorkflowEvent; 8] = [
        WorkflowEvent::ExploreProblems,
        WorkflowEvent::BackToData,
        WorkflowEvent::SpecifyProblem,
        WorkflowEvent::StartTraining,
        WorkflowEvent::ExploreModels,
        WorkflowEvent::SelectModels,
        WorkflowEvent::ExportModels,
        WorkflowEvent::RetryProblem,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WorkflowEvent::ExploreProblems => "exploreProblems",
            WorkflowEvent::BackToData => "backToData",
            WorkflowEvent::SpecifyProblem => "specifyProblem",
            WorkflowEvent::StartTraining => "startTraining",
            WorkflowEvent::ExploreModels => "exploreModels",
            WorkflowEvent::SelectModels => "selectModels",
            WorkflowEvent::ExportModels => "exportModels",
            WorkflowEvent::RetryProblem => "retryProblem",
        }
    }

    /// The step this event leads to.
    pub fn target(self) -> WorkflowStep {
        use WorkflowStep as S;
        match self {
            WorkflowEvent::ExploreProblems => S::ProblemExploration,
            WorkflowEvent::BackToData => S::DataExploration,
            WorkflowEvent::SpecifyProblem | WorkflowEvent::RetryProblem => S::ProblemSpecification,
            WorkflowEvent::StartTraining => S::ModelTraining,
            WorkflowEvent::ExploreModels => S::ModelExploration,
            WorkflowEvent::SelectModels => S::ModelSelection,
            WorkflowEvent::ExportModels => S::ExportModels,
        }
    }

    /// Steps from which this event is accepted.
    pub fn sources(self) -> &'static [WorkflowStep] {
        use WorkflowStep as S;
        match self {
            WorkflowEvent::ExploreProblems => &[S::DataExploration],
            WorkflowEvent::BackToData => &[S::ProblemExploration],
            WorkflowEvent::SpecifyProblem => &[S::ProblemExploration],
            WorkflowEvent::StartTraining => &[S::ProblemSpecification],
            WorkflowEvent::ExploreModels => &[S::ModelTraining],
            WorkflowEvent::SelectModels => &[S::ModelExploration],
            WorkflowEvent::ExportModels => &[S::ModelSelection],
            WorkflowEvent::RetryProblem => &[S::ModelExploration, S::ModelSelection, S::ExportModels],
        }
    }
}

impl fmt::Display for WorkflowEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogEntry {
    pub seq: usize,
    pub event: WorkflowEvent,
    pub from: WorkflowStep,
    pub to: WorkflowStep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchRef {
    pub search_id: String,
    pub spec_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Selection {
    pub candidate_id: String,
    pub user_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionState {
    pub id: String,
    pub step: WorkflowStep,
    pub dataset_id: String,
    pub specs: Vec<String>,
    #[serde(default)]
    pub active_spec_id: Option<String>,
    pub searches: Vec<SearchRef>,
    pub selections: Vec<Selection>,
    pub exports: Vec<ExportRecord>,
    pub event_log: Vec<LogEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("illegal transition from step {from} to step {to} via {event}")]
    IllegalTransition { from: WorkflowStep, to: WorkflowStep, event: WorkflowEvent },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("{op} requires step {required}, session is at step {step}")]
    WrongStep { op: &'static str, step: WorkflowStep, required: WorkflowStep },
    #[error("unknown candidate `{0}`")]
    UnknownCandidate(String),
    #[error("rank {0} assigned more than once")]
    DuplicateRank(usize),
    #[error("candidate `{0}` selected more than once")]
    DuplicateCandidate(String),
    #[error("user ranks start at 1")]
    InvalidRank,
    #[error("{candidates} candidates but {ranks} ranks")]
    RankCount { candidates: usize, ranks: usize },
    #[error("no models selected")]
    EmptySelection,
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("artifact format version {found} is not supported (this build reads version {supported})")]
    VersionMismatch { found: u64, supported: u64 },
    #[error("artifact is corrupted: {0}")]
    Corrupt(String),
}

impl SessionState {
    pub fn new(id: &str, dataset_id: &str) -> Self {
        SessionState {
            id: id.to_string(),
            step: WorkflowStep::DataExploration,
            dataset_id: dataset_id.to_string(),
            specs: Vec::new(),
            active_spec_id: None,
            searches: Vec::new(),
            selections: Vec::new(),
            exports: Vec::new(),
            event_log: Vec::new(),
        }
    }

    fn require(&self, op: &'static str, required: WorkflowStep) -> Result<(), SessionError> {
        if self.step == required {
            Ok(())
        } else {
            Err(SessionError::WrongStep { op, step: self.step, required })
        }
    }

    /// Record a spec as explored in this session.
    pub fn add_spec(&self, spec_id: &str) -> SessionState {
        let mut next = self.clone();
        if !next.specs.iter().any(|s| s == spec_id) {
            next.specs.push(spec_id.to_string());
        }
        next
    }

    pub fn set_active_spec(&self, spec_id: &str) -> Result<SessionState, SessionError> {
        self.require("setting the active spec", WorkflowStep::ProblemSpecification)?;
        let mut next = self.add_spec(spec_id);
        next.active_spec_id = Some(spec_id.to_string());
        Ok(next)
    }

    pub fn attach_search(&self, search_id: &str) -> Result<SessionState, SessionError> {
        self.require("attaching a search", WorkflowStep::ModelTraining)?;
        let spec_id = self.active_spec_id.clone().ok_or_else(|| SessionError::Precondition("no active spec".into()))?;
        let mut next = self.clone();
        if !next.searches.iter().any(|s| s.search_id == search_id) {
            next.searches.push(SearchRef { search_id: search_id.to_string(), spec_id });
        }
        Ok(next)
    }

    /// Replace the selection. `available` holds the ids of candidates from
    /// completed searches of this session.
    pub fn select(&self, candidate_ids: &[String], user_ranks: &[usize], available: &BTreeSet<String>) -> Result<SessionState, SessionError> {
        self.require("selecting models", WorkflowStep::ModelSelection)?;
        if candidate_ids.len() != user_ranks.len() {
            return Err(SessionError::RankCount { candidates: candidate_ids.len(), ranks: user_ranks.len() });
        }
        let mut ranks = BTreeSet::new();
        let mut ids = BTreeSet::new();
        for (id, &rank) in candidate_ids.iter().zip(user_ranks) {
            if !available.contains(id) {
                return Err(SessionError::UnknownCandidate(id.clone()));
            }
            if rank == 0 {
                return Err(SessionError::InvalidRank);
            }
            if !ranks.insert(rank) {
                return Err(SessionError::DuplicateRank(rank));
            }
            if !ids.insert(id) {
                return Err(SessionError::DuplicateCandidate(id.clone()));
            }
        }
        let mut selections: Vec<Selection> = candidate_ids
            .iter()
            .zip(user_ranks)
            .map(|(id, &user_rank)| Selection { candidate_id: id.clone(), user_rank })
            .collect();
        selections.sort_by_key(|s| s.user_rank);
        let mut next = self.clone();
        next.selections = selections;
        Ok(next)
    }

    fn check_preconditions(&self, event: WorkflowEvent) -> Result<(), SessionError> {
        match event {
            WorkflowEvent::StartTraining if self.active_spec_id.is_none() => {
                Err(SessionError::Precondition("choose a problem spec before training".into()))
            }
            WorkflowEvent::ExploreModels if self.searches.is_empty() => {
                Err(SessionError::Precondition("no search has been started".into()))
            }
            WorkflowEvent::ExportModels if self.selections.is_empty() => Err(SessionError::EmptySelection),
            _ => Ok(()),
        }
    }
}

/// Apply one workflow event, appending it to the event log.
pub fn advance(state: &SessionState, event: WorkflowEvent) -> Result<SessionState, SessionError> {
    let from = state.step;
    let to = event.target();
    if !event.sources().contains(&from) {
        return Err(SessionError::IllegalTransition { from, to, event });
    }
    state.check_preconditions(event)?;
    let mut next = state.clone();
    next.step = to;
    next.event_log.push(LogEntry { seq: state.event_log.len() + 1, event, from, to });
    Ok(next)
}

impl SessionState {
    pub fn advance(&self, event: WorkflowEvent) -> Result<SessionState, SessionError> {
        advance(self, event)
    }
}
