//! The `ema` command-line driver.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use ema_core::dataset::{DatasetSummary, SchemaDoc, SummaryDetail};
use ema_core::evaluation::EvalReport;
use ema_core::problemgen::{MetricId, ProblemSpec, SpecEdits};
use ema_core::session::{SessionState, WorkflowEvent, WorkflowStep};
use serde::Serialize;

use crate::error::ApiError;
use crate::store::{Store, StoreConfig};
use crate::wire::*;

#[derive(Debug, Parser)]
#[command(name = "ema", version, about = "Exploratory model analysis: datasets, problems, model search and export")]
pub struct Cli {
    /// Directory holding datasets, specs, searches and sessions
    #[arg(long, env = "EMA_DATA_DIR", default_value = "ema-data", global = true)]
    pub data_dir: PathBuf,
    /// Directory that exported artifacts are written to [default: <data-dir>/exports]
    #[arg(long, env = "EMA_EXPORT_DIR", global = true)]
    pub export_dir: Option<PathBuf>,
    /// Search worker threads
    #[arg(long, env = "EMA_WORKERS", default_value_t = 2, global = true)]
    pub workers: usize,
    /// Machine-readable JSON on stdout (errors as JSON on stderr)
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a CSV file with its schema document
    Ingest {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        schema: PathBuf,
    },
    /// Per-column histograms and frequency tables
    Summarize {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Enumerate candidate problem specifications
    Problems {
        #[arg(long)]
        dataset: String,
    },
    /// Derive a spec by removing features or changing the metric
    Refine {
        #[arg(long)]
        spec: String,
        #[arg(long = "remove-feature")]
        remove_features: Vec<String>,
        #[arg(long)]
        metric: Option<MetricId>,
    },
    /// Run a model search and print the ranked candidates
    Search {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        budget: usize,
        #[arg(long = "top-k")]
        top_k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "holdout-fraction")]
        holdout_fraction: Option<f64>,
        /// Run inside an existing session (a new one is created otherwise)
        #[arg(long)]
        session: Option<String>,
        #[arg(long = "timeout-secs", default_value_t = 3600)]
        timeout_secs: u64,
    },
    /// Holdout evaluation report of one candidate
    Report {
        #[arg(long)]
        candidate: String,
    },
    /// Record the preferred candidates of a session, best first
    Select {
        #[arg(long)]
        session: String,
        #[arg(long = "candidate", required = true)]
        candidates: Vec<String>,
        /// User ranks, one per candidate [default: 1, 2, ...]
        #[arg(long = "rank")]
        ranks: Vec<usize>,
    },
    /// Write artifacts and model cards for the selected candidates
    Export {
        #[arg(long)]
        session: String,
    },
    /// Show a session
    Session {
        #[arg(long)]
        session: String,
    },
    /// Serve the HTTP API
    Serve {
        #[arg(long, env = "EMA_PORT", default_value_t = 8737)]
        port: u16,
        #[arg(long, env = "EMA_HOST", default_value = "127.0.0.1")]
        host: String,
    },
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let json = cli.json;
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            if json {
                eprintln!("{}", serde_json::to_string(&e).unwrap_or_default());
            } else {
                eprintln!("error[{}]: {}", e.code, e.message);
            }
            1
        }
    }
}

fn open(cli: &Cli, resume_pending: bool) -> Result<Store, ApiError> {
    let export_dir = cli.export_dir.clone().unwrap_or_else(|| cli.data_dir.join("exports"));
    Store::open(StoreConfig { data_dir: cli.data_dir.clone(), export_dir, workers: cli.workers, resume_pending })
}

fn emit<T: Serialize>(json: bool, value: &T, human: impl FnOnce(&T) -> String) -> Result<(), ApiError> {
    let text = if json { serde_json::to_string_pretty(value).map_err(ApiError::internal)? } else { human(value) };
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", text.trim_end()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(ApiError::internal(e)),
        _ => Ok(()),
    }
}

fn read(path: &PathBuf) -> Result<String, ApiError> {
    std::fs::read_to_string(path).map_err(|e| ApiError::bad_request(format!("{}: {e}", path.display())))
}

/// Walk a session forward along the workflow until `step` is reached.
fn fast_forward(store: &Store, id: &str, target: WorkflowStep) -> Result<SessionState, ApiError> {
    let mut state = store.session(id)?;
    while state.step != target {
        let event = match (state.step, target) {
            (WorkflowStep::DataExploration, _) => WorkflowEvent::ExploreProblems,
            (WorkflowStep::ProblemExploration, _) => WorkflowEvent::SpecifyProblem,
            (WorkflowStep::ModelTraining, _) => WorkflowEvent::ExploreModels,
            (WorkflowStep::ModelExploration | WorkflowStep::ModelSelection | WorkflowStep::ExportModels, WorkflowStep::ProblemSpecification) => {
                WorkflowEvent::RetryProblem
            }
            (WorkflowStep::ModelExploration, _) => WorkflowEvent::SelectModels,
            (WorkflowStep::ModelSelection, _) => WorkflowEvent::ExportModels,
            (step, _) => {
                return Err(ApiError::new(
                    crate::ErrorCode::WorkflowPrecondition,
                    format!("cannot move session from step {step} to step {target}"),
                ))
            }
        };
        state = store.advance(id, event)?;
    }
    Ok(state)
}

fn execute(cli: Cli) -> Result<(), ApiError> {
    let json = cli.json;
    if let Command::Serve { port, host } = &cli.command {
        return serve(&cli, host, *port);
    }
    let store = open(&cli, false)?;
    match cli.command {
        Command::Ingest { csv, schema } => {
            let schema: SchemaDoc = SchemaDoc::from_json(&read(&schema)?)?;
            let info = store.upload_dataset(UploadDataset { csv: read(&csv)?, schema })?;
            emit(json, &info, |i| {
                format!("dataset {}\n  name: {}\n  rows: {}\n  columns: {}", i.dataset_id, i.metadata.name, i.row_count, i.columns.len())
            })
        }
        Command::Summarize { dataset, bins } => emit(json, &store.summary(&dataset, bins)?, human_summary),
        Command::Problems { dataset } => emit(json, &store.enumerate(&dataset)?, |l| {
            let mut s = format!("{} problem specifications for {}\n", l.specs.len(), l.dataset_id);
            for spec in &l.specs {
                s += &format!("  {}\n", spec_line(spec));
            }
            s
        }),
        Command::Refine { spec, remove_features, metric } => {
            let refined = store.refine(&spec, &SpecEdits { remove_features, set_metric: metric })?;
            emit(json, &refined, |s| format!("refined {spec} →\n  {}", spec_line(s)))
        }
        Command::Search { spec, budget, top_k, seed, holdout_fraction, session, timeout_secs } => {
            let spec = store.spec(&spec)?;
            let session_id = match session {
                Some(id) => id,
                None => store.create_session(CreateSession { dataset_id: spec.dataset_id.clone(), session_id: None })?.id,
            };
            let current = store.session(&session_id)?;
            let resume_training = current.step == WorkflowStep::ModelTraining && current.active_spec_id.as_deref() == Some(spec.id.as_str());
            if !resume_training {
                fast_forward(&store, &session_id, WorkflowStep::ProblemSpecification)?;
            }
            let submitted = store.submit_search(SubmitSearch {
                spec_id: spec.id.clone(),
                budget,
                top_k,
                seed,
                holdout_fraction,
                session_id: Some(session_id.clone()),
            })?;
            store.wait_search(&submitted.search_id, Duration::from_secs(timeout_secs))?;
            let session = store.advance(&session_id, WorkflowEvent::ExploreModels)?;
            let run = SearchRun {
                session,
                status: store.search_status(&submitted.search_id)?,
                candidates: store.candidates(&submitted.search_id, None, None)?,
            };
            emit(json, &run, human_search)
        }
        Command::Report { candidate } => emit(json, &store.report(&candidate)?, human_report),
        Command::Select { session, candidates, ranks } => {
            let ranks = if ranks.is_empty() { (1..=candidates.len()).collect() } else { ranks };
            fast_forward(&store, &session, WorkflowStep::ModelSelection)?;
            let state = store.select(&session, &SelectCandidates { candidate_ids: candidates, user_ranks: ranks })?;
            emit(json, &state, |s| {
                let mut out = format!("session {} at step {}\n", s.id, s.step);
                for sel in &s.selections {
                    out += &format!("  rank {}: {}\n", sel.user_rank, sel.candidate_id);
                }
                out
            })
        }
        Command::Export { session } => {
            let result = store.export(&session)?;
            emit(json, &result, |r| {
                let mut out = format!("exported {} model(s)\n", r.exports.len());
                for e in &r.exports {
                    out += &format!("  rank {}: {}\n           {}\n", e.user_rank, e.artifact_path, e.card_path);
                }
                out
            })
        }
        Command::Session { session } => emit(json, &store.session(&session)?, |s| {
            format!(
                "session {}\n  dataset: {}\n  step: {}\n  active spec: {}\n  searches: {}\n  selections: {}\n  exports: {}\n  events: {}",
                s.id,
                s.dataset_id,
                s.step,
                s.active_spec_id.as_deref().unwrap_or("-"),
                s.searches.len(),
                s.selections.len(),
                s.exports.len(),
                s.event_log.len()
            )
        }),
        Command::Serve { .. } => unreachable!(),
    }
}

fn serve(cli: &Cli, host: &str, port: u16) -> Result<(), ApiError> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .try_init();
    let store = Arc::new(open(cli, true)?);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(ApiError::internal)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port)).await.map_err(ApiError::internal)?;
        let addr = listener.local_addr().map_err(ApiError::internal)?;
        tracing::info!("listening on http://{addr} (data dir {})", store.config().data_dir.display());
        crate::api::serve(store, listener).await.map_err(ApiError::internal)
    })
}

fn spec_line(s: &ProblemSpec) -> String {
    format!("{}  {:<22} target={:<14} metric={:<14} features={}", s.id, s.task_type.as_str(), s.target, s.metric.as_str(), s.features.join(","))
}

fn human_summary(s: &DatasetSummary) -> String {
    let mut out = format!("{} rows, {} bins\n", s.row_count, s.bin_count);
    for c in &s.columns {
        out += &format!("  {} ({}, {} missing)\n", c.name, c.kind.as_str(), c.missing);
        match &c.detail {
            SummaryDetail::Frequencies { entries } => {
                for e in entries.iter().take(12) {
                    out += &format!("      {:<20} {}\n", e.label, e.count);
                }
                if entries.len() > 12 {
                    out += &format!("      … {} more labels\n", entries.len() - 12);
                }
            }
            SummaryDetail::Histogram { edges, counts } | SummaryDetail::Span { edges, counts, .. } => {
                let max = counts.iter().copied().max().unwrap_or(1).max(1);
                for (i, n) in counts.iter().enumerate() {
                    let bar = "#".repeat(n * 30 / max);
                    out += &format!("      [{:>10.4}, {:>10.4}) {:>5} {bar}\n", edges[i], edges[i + 1], n);
                }
            }
        }
    }
    out
}

fn human_search(r: &SearchRun) -> String {
    let c = &r.candidates;
    let mut out = format!(
        "search {} ({} of {} configurations, session {})\nsplit: {} seed {} holdout {} rows\n",
        c.search_id,
        r.status.evaluated,
        r.status.total,
        r.session.id,
        c.split.strategy.as_str(),
        c.split.seed,
        c.split.holdout_row_ids.len()
    );
    out += &format!("{:>4}  {:<22} {:<40} {:>12} {:>12}\n", "rank", "candidate", "pipeline", c.metric.as_str(), "cv");
    for cand in &c.candidates {
        out += &format!("{:>4}  {:<22} {:<40} {:>12.6} {:>12.6}\n", cand.rank, cand.id, cand.label, cand.score, cand.cv_score);
    }
    for f in &c.failures {
        out += &format!("  skipped {}: {}\n", f.label, f.message);
    }
    out
}

fn human_report(r: &EvalReport) -> String {
    let mut out = format!("candidate {} ({} holdout rows)\nscores:\n", r.candidate_id, r.per_instance.len());
    for (m, v) in &r.scores {
        out += &format!("  {:<16} {v:.6}\n", m.as_str());
    }
    if let Some(cm) = &r.confusion {
        out += "confusion (rows = truth, columns = prediction):\n";
        out += &format!("  {:<12}", "");
        for l in &cm.labels {
            out += &format!(" {l:>10}");
        }
        out += "\n";
        for (l, row) in cm.labels.iter().zip(&cm.cells) {
            out += &format!("  {l:<12}");
            for n in row {
                out += &format!(" {n:>10}");
            }
            out += "\n";
        }
    } else {
        out += "largest residuals:\n";
        for rec in r.by_residual_magnitude().iter().take(10) {
            out += &format!("  row {:>5}  residual {:+.4}\n", rec.row_id, rec.residual.unwrap_or_default());
        }
    }
    for f in &r.flags {
        out += &format!("note: {f}\n");
    }
    out
}
