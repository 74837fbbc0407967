use std::collections::HashMap;
use std::sync::atomic::{AtomicU8, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::Duration;

use crossbeam_channel::{unbounded, Receiver, Sender};
use serde::{Deserialize, Serialize};

use super::{run_search, schedule, SearchError, SearchOutcome, SearchRequest};
use crate::dataset::DatasetBundle;
use crate::problemgen::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SearchState {
    Queued,
    Running,
    Done,
    Failed,
}

impl SearchState {
    fn from_u8(v: u8) -> Self {
        match v {
            0 => SearchState::Queued,
            1 => SearchState::Running,
            2 => SearchState::Done,
            _ => SearchState::Failed,
        }
    }

    pub fn is_finished(self) -> bool {
        matches!(self, SearchState::Done | SearchState::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchStatus {
    pub search_id: String,
    pub state: SearchState,
    pub evaluated: usize,
    pub total: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub struct SearchJob {
    pub request: SearchRequest,
    pub bundle: Arc<DatasetBundle>,
    pub spec: ProblemSpec,
}

type Finished = Result<Arc<SearchOutcome>, SearchError>;
type Hook = Box<dyn Fn(&str, &Finished) + Send + Sync>;

struct Record {
    state: AtomicU8,
    evaluated: AtomicUsize,
    total: usize,
    result: Mutex<Option<Finished>>,
    finished: Condvar,
}

impl Record {
    fn new(total: usize) -> Self {
        Record {
            state: AtomicU8::new(0),
            evaluated: AtomicUsize::new(0),
            total,
            result: Mutex::new(None),
            finished: Condvar::new(),
        }
    }

    fn finish(&self, result: Finished) {
        let state = if result.is_ok() { SearchState::Done } else { SearchState::Failed };
        if let Ok(outcome) = &result {
            self.evaluated.fetch_max(outcome.total, Ordering::SeqCst);
        }
        *self.result.lock().unwrap() = Some(result);
        self.state.store(state as u8, Ordering::SeqCst);
        self.finished.notify_all();
    }
}

struct Shared {
    records: RwLock<HashMap<String, Arc<Record>>>,
    on_finish: Option<Hook>,
}

/// Asynchronous searches on a fixed pool of worker threads. Status reads take
/// only a short read lock and never wait on running work.
pub struct SearchRegistry {
    shared: Arc<Shared>,
    sender: Option<Sender<(String, SearchJob)>>,
    workers: Vec<JoinHandle<()>>,
}

impl SearchRegistry {
    pub fn new(workers: usize) -> Self {
        Self::build(workers, None)
    }

    /// `on_finish` runs on the worker thread once a search's result is final.
    pub fn with_hook(workers: usize, on_finish: impl Fn(&str, &Finished) + Send + Sync + 'static) -> Self {
        Self::build(workers, Some(Box::new(on_finish)))
    }

    fn build(workers: usize, on_finish: Option<Hook>) -> Self {
        let shared = Arc::new(Shared { records: RwLock::new(HashMap::new()), on_finish });
        let (sender, receiver) = unbounded::<(String, SearchJob)>();
        let workers = (0..workers.max(1))
            .map(|i| {
                let shared = Arc::clone(&shared);
                let receiver: Receiver<(String, SearchJob)> = receiver.clone();
                std::thread::Builder::new()
                    .name(format!("search-worker-{i}"))
                    .spawn(move || {
                        for (id, job) in receiver {
                            run_job(&shared, &id, job);
                        }
                    })
                    .expect("spawn search worker")
            })
            .collect();
        SearchRegistry { shared, sender: Some(sender), workers }
    }

    /// Queue a search. Resubmitting an identical request returns the existing id.
    pub fn submit(&self, job: SearchJob) -> String {
        let id = job.request.search_id(job.bundle.id());
        let total = schedule(&job.spec, job.bundle.metadata().season_period, job.request.budget).len();
        {
            let mut records = self.shared.records.write().unwrap();
            if records.contains_key(&id) {
                return id;
            }
            records.insert(id.clone(), Arc::new(Record::new(total)));
        }
        self.sender.as_ref().expect("registry running").send((id.clone(), job)).expect("workers alive");
        id
    }

    /// Register an already-finished search (e.g. reloaded from disk).
    pub fn insert_finished(&self, outcome: SearchOutcome) {
        let record = Record::new(outcome.total);
        let id = outcome.search_id.clone();
        record.finish(Ok(Arc::new(outcome)));
        self.shared.records.write().unwrap().insert(id, Arc::new(record));
    }

    fn record(&self, id: &str) -> Option<Arc<Record>> {
        self.shared.records.read().unwrap().get(id).cloned()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.shared.records.read().unwrap().contains_key(id)
    }

    pub fn status(&self, id: &str) -> Option<SearchStatus> {
        let record = self.record(id)?;
        let state = SearchState::from_u8(record.state.load(Ordering::SeqCst));
        let error = match state {
            SearchState::Failed => record.result.lock().unwrap().as_ref().and_then(|r| r.as_ref().err().map(|e| e.to_string())),
            _ => None,
        };
        Some(SearchStatus {
            search_id: id.to_string(),
            state,
            evaluated: record.evaluated.load(Ordering::SeqCst).min(record.total),
            total: record.total,
            error,
        })
    }

    /// Final result, or `None` while the search is still queued or running.
    pub fn result(&self, id: &str) -> Option<Finished> {
        self.record(id)?.result.lock().unwrap().clone()
    }

    /// Block until the search finishes or `timeout` passes.
    pub fn wait(&self, id: &str, timeout: Duration) -> Option<Finished> {
        let record = self.record(id)?;
        let guard = record.result.lock().unwrap();
        let (guard, _) = record.finished.wait_timeout_while(guard, timeout, |r| r.is_none()).unwrap();
        guard.clone()
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.shared.records.read().unwrap().keys().cloned().collect();
        ids.sort();
        ids
    }
}

fn run_job(shared: &Shared, id: &str, job: SearchJob) {
    let Some(record) = shared.records.read().unwrap().get(id).cloned() else {
        return;
    };
    record.state.store(SearchState::Running as u8, Ordering::SeqCst);
    let progress = |n: usize| {
        record.evaluated.fetch_max(n, Ordering::SeqCst);
    };
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run_search(&job.request, &job.bundle, &job.spec, &progress)))
        .unwrap_or_else(|_| Err(SearchError::Failed("search worker panicked".into())))
        .map(Arc::new);
    if let Some(hook) = &shared.on_finish {
        hook(id, &result);
    }
    record.finish(result);
}

impl Drop for SearchRegistry {
    fn drop(&mut self) {
        self.sender.take();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}
