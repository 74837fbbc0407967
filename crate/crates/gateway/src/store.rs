//! Shared service state over a data directory. Both the HTTP handlers and the
//! CLI go through these operations.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use ema_core::canonical::to_canonical_pretty;
use ema_core::dataset::{ingest, rows_matching, summarize, DatasetBundle, DatasetSummary, RowSelector, SchemaDoc};
use ema_core::evaluation::{EvalReport, DEFAULT_HOLDOUT_FRACTION};
use ema_core::problemgen::{create_spec, enumerate_specs, refine_spec, validate_spec, ProblemSpec, SpecEdits, SpecFields};
use ema_core::search::{CandidateModel, SearchJob, SearchOutcome, SearchRegistry, SearchRequest, SearchStatus};
use ema_core::session::{advance, export_selected, ExportSource, SessionState, SessionStore, WorkflowEvent, WorkflowStep};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{ApiError, ErrorCode};
use crate::wire::*;

#[derive(Debug, Clone)]
pub struct StoreConfig {
    pub data_dir: PathBuf,
    pub export_dir: PathBuf,
    pub workers: usize,
    /// Re-queue searches that were submitted but never finished.
    pub resume_pending: bool,
}

impl StoreConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        let data_dir = data_dir.into();
        StoreConfig { export_dir: data_dir.join("exports"), data_dir, workers: 2, resume_pending: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct StoredRequest {
    dataset_id: String,
    request: SearchRequest,
}

struct Dirs {
    datasets: PathBuf,
    specs: PathBuf,
    searches: PathBuf,
}

/// Candidate id → search id, filled in as searches finish.
type CandidateIndex = RwLock<BTreeMap<String, String>>;

pub struct Store {
    config: StoreConfig,
    dirs: Arc<Dirs>,
    datasets: RwLock<BTreeMap<String, Arc<DatasetBundle>>>,
    specs: RwLock<BTreeMap<String, ProblemSpec>>,
    candidates: Arc<CandidateIndex>,
    registry: SearchRegistry,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<SessionState>>>>,
    session_store: SessionStore,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> ApiError {
    ApiError::internal(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<(), ApiError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| io_error(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ApiError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_error(path, e))
}

fn files_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>, ApiError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_error(dir, e))? {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        if path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(suffix)) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn index_outcome(index: &CandidateIndex, outcome: &SearchOutcome) {
    let mut index = index.write().unwrap();
    for c in &outcome.candidates {
        index.entry(c.id.clone()).or_insert_with(|| outcome.search_id.clone());
    }
}

fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Store {
    /// Open (or create) the data directory and reload everything in it.
    /// Searches that were submitted but never finished are queued again.
    pub fn open(config: StoreConfig) -> Result<Self, ApiError> {
        let dirs = Arc::new(Dirs {
            datasets: config.data_dir.join("datasets"),
            specs: config.data_dir.join("specs"),
            searches: config.data_dir.join("searches"),
        });
        for d in [&dirs.datasets, &dirs.specs, &dirs.searches] {
            fs::create_dir_all(d).map_err(|e| io_error(d, e))?;
        }
        let session_store = SessionStore::open(config.data_dir.join("sessions"))?;
        let candidates: Arc<CandidateIndex> = Arc::default();
        let registry = {
            let dirs = Arc::clone(&dirs);
            let candidates = Arc::clone(&candidates);
            SearchRegistry::with_hook(config.workers, move |id, result| match result {
                Ok(outcome) => {
                    let path = dirs.searches.join(format!("{id}.outcome.json"));
                    if let Err(e) = write_file(&path, &to_canonical_pretty(outcome.as_ref())) {
                        tracing::error!("persisting search {id}: {e}");
                    }
                    index_outcome(&candidates, outcome);
                }
                Err(e) => tracing::warn!("search {id} failed: {e}"),
            })
        };
        let store = Store {
            config,
            dirs,
            datasets: RwLock::default(),
            specs: RwLock::default(),
            candidates,
            registry,
            sessions: RwLock::default(),
            session_store,
        };
        store.reload()?;
        Ok(store)
    }

    fn reload(&self) -> Result<(), ApiError> {
        for schema_path in files_with_suffix(&self.dirs.datasets, ".schema.json")? {
            let schema: SchemaDoc = read_json(&schema_path)?;
            let csv_path = PathBuf::from(schema_path.to_string_lossy().replace(".schema.json", ".csv"));
            let csv = fs::read(&csv_path).map_err(|e| io_error(&csv_path, e))?;
            let bundle = ingest(&csv, &schema)?;
            self.datasets.write().unwrap().insert(bundle.id().to_string(), Arc::new(bundle));
        }
        for path in files_with_suffix(&self.dirs.specs, ".json")? {
            let spec: ProblemSpec = read_json(&path)?;
            self.specs.write().unwrap().insert(spec.id.clone(), spec);
        }
        for path in files_with_suffix(&self.dirs.searches, ".request.json")? {
            let stored: StoredRequest = read_json(&path)?;
            let id = stored.request.search_id(&stored.dataset_id);
            let outcome_path = self.dirs.searches.join(format!("{id}.outcome.json"));
            if outcome_path.exists() {
                let outcome: SearchOutcome = read_json(&outcome_path)?;
                index_outcome(&self.candidates, &outcome);
                self.registry.insert_finished(outcome);
            } else if self.config.resume_pending {
                let spec = self.spec(&stored.request.spec_id)?;
                let bundle = self.dataset(&stored.dataset_id)?;
                self.registry.submit(SearchJob { request: stored.request, bundle, spec });
            }
        }
        for state in self.session_store.load_all()? {
            self.sessions.write().unwrap().insert(state.id.clone(), Arc::new(Mutex::new(state)));
        }
        Ok(())
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    pub fn health(&self) -> Health {
        Health {
            status: "ok".into(),
            datasets: self.datasets.read().unwrap().len(),
            searches: self.registry.ids().len(),
            sessions: self.sessions.read().unwrap().len(),
        }
    }

    // datasets

    pub fn upload_dataset(&self, upload: UploadDataset) -> Result<DatasetInfo, ApiError> {
        let bundle = ingest(upload.csv.as_bytes(), &upload.schema)?;
        let id = bundle.id().to_string();
        if !self.datasets.read().unwrap().contains_key(&id) {
            write_file(&self.dirs.datasets.join(format!("{id}.csv")), &bundle.to_csv())?;
            write_file(&self.dirs.datasets.join(format!("{id}.schema.json")), &to_canonical_pretty(&bundle.schema_doc()))?;
        }
        let info = DatasetInfo::from(&bundle);
        self.datasets.write().unwrap().entry(id).or_insert_with(|| Arc::new(bundle));
        Ok(info)
    }

    pub fn dataset(&self, id: &str) -> Result<Arc<DatasetBundle>, ApiError> {
        self.datasets.read().unwrap().get(id).cloned().ok_or_else(|| ApiError::not_found("dataset", id))
    }

    pub fn dataset_info(&self, id: &str) -> Result<DatasetInfo, ApiError> {
        Ok(DatasetInfo::from(self.dataset(id)?.as_ref()))
    }

    pub fn list_datasets(&self) -> DatasetList {
        DatasetList { datasets: self.datasets.read().unwrap().values().map(|b| DatasetInfo::from(b.as_ref())).collect() }
    }

    pub fn summary(&self, id: &str, bins: Option<usize>) -> Result<DatasetSummary, ApiError> {
        let bins = bins.unwrap_or(ema_core::dataset::DEFAULT_BIN_COUNT);
        if bins == 0 {
            return Err(ApiError::bad_request("bins must be at least 1"));
        }
        Ok(summarize(&*self.dataset(id)?, bins))
    }

    pub fn rows(&self, id: &str, selector: &RowSelector) -> Result<RowSet, ApiError> {
        let rows = rows_matching(&*self.dataset(id)?, selector)?;
        Ok(RowSet { dataset_id: id.to_string(), row_ids: rows.into_iter().collect() })
    }

    pub fn table(&self, id: &str, offset: Option<usize>, limit: Option<usize>) -> Result<TablePage, ApiError> {
        let bundle = self.dataset(id)?;
        let offset = offset.unwrap_or(0).min(bundle.row_count());
        let limit = limit.unwrap_or(100);
        Ok(TablePage {
            dataset_id: id.to_string(),
            columns: bundle.columns().iter().map(|c| c.name().to_string()).collect(),
            total: bundle.row_count(),
            offset,
            rows: (offset..bundle.row_count())
                .take(limit)
                .map(|r| TableRow { row_id: r, values: bundle.row_record(r) })
                .collect(),
        })
    }

    // specs

    fn put_spec(&self, spec: &ProblemSpec) -> Result<(), ApiError> {
        if self.specs.read().unwrap().contains_key(&spec.id) {
            return Ok(());
        }
        write_file(&self.dirs.specs.join(format!("{}.json", spec.id)), &to_canonical_pretty(spec))?;
        self.specs.write().unwrap().insert(spec.id.clone(), spec.clone());
        Ok(())
    }

    pub fn enumerate(&self, dataset_id: &str) -> Result<SpecList, ApiError> {
        let specs = enumerate_specs(&*self.dataset(dataset_id)?);
        for s in &specs {
            self.put_spec(s)?;
        }
        Ok(SpecList { dataset_id: dataset_id.to_string(), specs })
    }

    pub fn create_spec(&self, req: CreateSpec) -> Result<ProblemSpec, ApiError> {
        let bundle = self.dataset(&req.dataset_id)?;
        let spec = create_spec(
            SpecFields { task_type: req.task_type, target: req.target, features: req.features, metric: req.metric },
            &bundle,
        )?;
        self.put_spec(&spec)?;
        Ok(spec)
    }

    pub fn spec(&self, id: &str) -> Result<ProblemSpec, ApiError> {
        self.specs.read().unwrap().get(id).cloned().ok_or_else(|| ApiError::not_found("spec", id))
    }

    pub fn refine(&self, id: &str, edits: &SpecEdits) -> Result<ProblemSpec, ApiError> {
        let parent = self.spec(id)?;
        let refined = refine_spec(&parent, edits)?;
        validate_spec(&refined, &*self.dataset(&parent.dataset_id)?)?;
        self.put_spec(&refined)?;
        Ok(refined)
    }

    // searches

    pub fn submit_search(&self, req: SubmitSearch) -> Result<SearchSubmitted, ApiError> {
        let spec = self.spec(&req.spec_id)?;
        let bundle = self.dataset(&spec.dataset_id)?;
        let request = SearchRequest {
            spec_id: spec.id.clone(),
            budget: req.budget,
            top_k: req.top_k,
            seed: req.seed,
            holdout_fraction: req.holdout_fraction.unwrap_or(DEFAULT_HOLDOUT_FRACTION),
        };
        if request.budget == 0 || request.top_k == 0 {
            return Err(ApiError::bad_request("budget and topK must both be at least 1"));
        }
        if !(request.holdout_fraction > 0.0 && request.holdout_fraction < 1.0) {
            return Err(ApiError::bad_request("holdoutFraction must lie strictly between 0 and 1"));
        }
        let submit = || -> Result<String, ApiError> {
            let stored = StoredRequest { dataset_id: bundle.id().to_string(), request: request.clone() };
            let id = request.search_id(bundle.id());
            let path = self.dirs.searches.join(format!("{id}.request.json"));
            if !path.exists() {
                write_file(&path, &to_canonical_pretty(&stored))?;
            }
            Ok(self.registry.submit(SearchJob { request: request.clone(), bundle: Arc::clone(&bundle), spec: spec.clone() }))
        };
        let (search_id, session) = match &req.session_id {
            None => (submit()?, None),
            Some(sid) => {
                let mut search_id = String::new();
                let state = self.mutate_session(sid, |s| {
                    if s.dataset_id != spec.dataset_id {
                        return Err(ApiError::new(ErrorCode::WorkflowPrecondition, "spec belongs to a different dataset than the session"));
                    }
                    let s = match s.step {
                        WorkflowStep::ProblemSpecification => advance(&s.set_active_spec(&spec.id)?, WorkflowEvent::StartTraining)?,
                        WorkflowStep::ModelTraining if s.active_spec_id.as_deref() == Some(spec.id.as_str()) => s.clone(),
                        step => {
                            return Err(ApiError::new(
                                ErrorCode::WorkflowPrecondition,
                                format!("searches start from step 3, or step 4 with the same active spec; session is at step {step}"),
                            ))
                        }
                    };
                    search_id = submit()?;
                    Ok(s.attach_search(&search_id)?)
                })?;
                (search_id, Some(state))
            }
        };
        let status = self.search_status(&search_id)?;
        Ok(SearchSubmitted { search_id, status, session })
    }

    pub fn search_status(&self, id: &str) -> Result<SearchStatus, ApiError> {
        self.registry.status(id).ok_or_else(|| ApiError::not_found("search", id))
    }

    pub fn outcome(&self, id: &str) -> Result<Arc<SearchOutcome>, ApiError> {
        let status = self.search_status(id)?;
        match self.registry.result(id) {
            Some(Ok(o)) => Ok(o),
            Some(Err(e)) => Err(e.into()),
            None => Err(ApiError::new(ErrorCode::SearchPending, format!("search `{id}` is {:?}", status.state).to_lowercase())
                .with_details(json!({ "evaluated": status.evaluated, "total": status.total }))),
        }
    }

    pub fn wait_search(&self, id: &str, timeout: Duration) -> Result<Arc<SearchOutcome>, ApiError> {
        self.search_status(id)?;
        self.registry.wait(id, timeout);
        self.outcome(id)
    }

    pub fn candidates(&self, id: &str, offset: Option<usize>, limit: Option<usize>) -> Result<CandidateList, ApiError> {
        Ok(CandidateList::from_outcome(&*self.outcome(id)?, offset, limit))
    }

    fn find_candidate(&self, id: &str) -> Result<(Arc<SearchOutcome>, CandidateModel), ApiError> {
        let search_id = self.candidates.read().unwrap().get(id).cloned().ok_or_else(|| ApiError::not_found("candidate", id))?;
        let outcome = self.outcome(&search_id)?;
        let candidate = outcome.candidate(id).cloned().ok_or_else(|| ApiError::not_found("candidate", id))?;
        Ok((outcome, candidate))
    }

    pub fn report(&self, candidate_id: &str) -> Result<EvalReport, ApiError> {
        Ok(self.find_candidate(candidate_id)?.1.holdout_report)
    }

    // sessions

    pub fn create_session(&self, req: CreateSession) -> Result<SessionState, ApiError> {
        self.dataset(&req.dataset_id)?;
        let id = req.session_id.unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
        if !valid_session_id(&id) {
            return Err(ApiError::bad_request("session ids use letters, digits, `-` and `_` (at most 64)"));
        }
        let mut sessions = self.sessions.write().unwrap();
        if let Some(existing) = sessions.get(&id) {
            let existing = existing.lock().unwrap().clone();
            if existing.dataset_id != req.dataset_id {
                return Err(ApiError::bad_request(format!("session `{id}` already exists for another dataset")));
            }
            return Ok(existing);
        }
        let state = SessionState::new(&id, &req.dataset_id);
        self.session_store.save(&state)?;
        sessions.insert(id, Arc::new(Mutex::new(state.clone())));
        Ok(state)
    }

    pub fn session(&self, id: &str) -> Result<SessionState, ApiError> {
        let cell = self.sessions.read().unwrap().get(id).cloned().ok_or_else(|| ApiError::not_found("session", id))?;
        let state = cell.lock().unwrap().clone();
        Ok(state)
    }

    /// Apply one mutation under the session's lock and snapshot the result.
    fn mutate_session(&self, id: &str, f: impl FnOnce(&SessionState) -> Result<SessionState, ApiError>) -> Result<SessionState, ApiError> {
        let cell = self.sessions.read().unwrap().get(id).cloned().ok_or_else(|| ApiError::not_found("session", id))?;
        let mut guard = cell.lock().unwrap();
        let next = f(&guard)?;
        if next != *guard {
            self.session_store.save(&next)?;
            *guard = next;
        }
        Ok(guard.clone())
    }

    pub fn advance(&self, id: &str, event: WorkflowEvent) -> Result<SessionState, ApiError> {
        self.mutate_session(id, |s| Ok(advance(s, event)?))
    }

    pub fn set_active_spec(&self, id: &str, spec_id: &str) -> Result<SessionState, ApiError> {
        let spec = self.spec(spec_id)?;
        self.mutate_session(id, |s| {
            if s.dataset_id != spec.dataset_id {
                return Err(ApiError::new(ErrorCode::WorkflowPrecondition, "spec belongs to a different dataset than the session"));
            }
            Ok(s.set_active_spec(spec_id)?)
        })
    }

    fn available_candidates(&self, state: &SessionState) -> BTreeSet<String> {
        state
            .searches
            .iter()
            .filter_map(|r| match self.registry.result(&r.search_id) {
                Some(Ok(o)) => Some(o),
                _ => None,
            })
            .flat_map(|o| o.candidates.iter().map(|c| c.id.clone()).collect::<Vec<_>>())
            .collect()
    }

    pub fn select(&self, id: &str, req: &SelectCandidates) -> Result<SessionState, ApiError> {
        self.mutate_session(id, |s| {
            let available = self.available_candidates(s);
            Ok(s.select(&req.candidate_ids, &req.user_ranks, &available)?)
        })
    }

    /// Export the selection, moving 6→7 first when needed.
    pub fn export(&self, id: &str) -> Result<ExportResult, ApiError> {
        let mut exports = Vec::new();
        let session = self.mutate_session(id, |s| {
            if s.selections.is_empty() {
                return Err(ema_core::session::SessionError::EmptySelection.into());
            }
            let s = if s.step == WorkflowStep::ModelSelection { advance(s, WorkflowEvent::ExportModels)? } else { s.clone() };
            let resolve = |cid: &str| -> Option<ExportSource> {
                let (outcome, candidate) = self.find_candidate(cid).ok()?;
                let spec = self.spec(&outcome.request.spec_id).ok()?;
                let bundle = self.dataset(&outcome.dataset_id).ok()?;
                Some(ExportSource {
                    candidate,
                    spec,
                    split: outcome.split.clone(),
                    dataset_id: bundle.id().to_string(),
                    dataset: bundle.metadata().clone(),
                })
            };
            let (next, records) = export_selected(&s, &self.config.export_dir, resolve)?;
            exports = records;
            Ok(next)
        })?;
        Ok(ExportResult { session, exports })
    }
}
