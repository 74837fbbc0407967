mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixtures_dir;
use ema_core::evaluation::EvalReport;
use ema_core::problemgen::ProblemSpec;
use ema_core::session::SessionState;
use ema_gateway::wire::{DatasetInfo, ExportResult, SearchRun, SpecList};
use ema_gateway::ApiError;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

fn ema(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ema"))
        .args(args)
        .env_remove("EMA_EXPORT_DIR")
        .env_remove("EMA_WORKERS")
        .env("EMA_DATA_DIR", data)
        .output()
        .unwrap()
}

/// Run in machine mode, parse stdout as `T` and check it serializes back to the same document.
fn json<T: DeserializeOwned + Serialize>(data: &Path, args: &[&str]) -> T {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = ema(data, &full);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let raw: Value = serde_json::from_slice(&out.stdout).unwrap();
    let typed: T = serde_json::from_value(raw.clone()).unwrap();
    assert_eq!(serde_json::to_value(&typed).unwrap(), raw, "{args:?} does not round-trip");
    typed
}

fn ingest(data: &Path, name: &str) -> DatasetInfo {
    let dir = fixtures_dir();
    let csv = dir.join(format!("{name}.csv"));
    let schema = dir.join(format!("{name}.schema.json"));
    json(data, &["ingest", "--csv", csv.to_str().unwrap(), "--schema", schema.to_str().unwrap()])
}

#[test]
fn problems_on_mixed_fixture_lists_twelve_specs() {
    let data = tempfile::tempdir().unwrap();
    let info = ingest(data.path(), "mixed_small");
    assert_eq!(info.row_count, 40);
    let specs: SpecList = json(data.path(), &["problems", "--dataset", &info.dataset_id]);
    assert_eq!(specs.specs.len(), 12);
    let text = ema(data.path(), &["problems", "--dataset", &info.dataset_id]);
    assert!(text.status.success());
    let listed = String::from_utf8(text.stdout).unwrap();
    for spec in &specs.specs {
        assert!(listed.contains(&spec.id));
    }
}

#[test]
fn mpg_search_prints_six_ranked_candidates_and_reports() {
    let data = tempfile::tempdir().unwrap();
    let info = ingest(data.path(), "auto_mpg");
    let specs: SpecList = json(data.path(), &["problems", "--dataset", &info.dataset_id]);
    let spec = specs.specs.iter().find(|s| s.target == "mpg" && s.metric.as_str() == "mse").unwrap();
    let run: SearchRun = json(data.path(), &["search", "--spec", &spec.id, "--budget", "6", "--top-k", "6"]);
    assert_eq!(run.candidates.candidates.len(), 6);
    assert_eq!(run.candidates.candidates.iter().map(|c| c.rank).collect::<Vec<_>>(), [1, 2, 3, 4, 5, 6]);
    assert_eq!(run.session.step.number(), 5);
    let scores: Vec<f64> = run.candidates.candidates.iter().map(|c| c.score).collect();
    assert!(scores.windows(2).all(|w| w[0] <= w[1]), "{scores:?}");

    let report: EvalReport = json(data.path(), &["report", "--candidate", &run.candidates.candidates[2].id]);
    assert!(report.confusion.is_none());
    assert_eq!(report.per_instance.len(), run.candidates.split.holdout_row_ids.len());

    let human = ema(data.path(), &["search", "--spec", &spec.id, "--budget", "6", "--top-k", "6"]);
    let text = String::from_utf8(human.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.trim_start().starts_with(|c: char| c.is_ascii_digit()) && l.contains("cand-")).count(), 6);
}

#[test]
fn export_without_selection_fails_on_stderr() {
    let data = tempfile::tempdir().unwrap();
    let info = ingest(data.path(), "mixed_small");
    let specs: SpecList = json(data.path(), &["problems", "--dataset", &info.dataset_id]);
    let spec = specs.specs.iter().find(|s| s.target == "species" && s.metric.as_str() == "accuracy").unwrap();
    let run: SearchRun = json(data.path(), &["search", "--spec", &spec.id, "--budget", "4", "--top-k", "2", "--seed", "9"]);
    let sid = run.session.id.clone();

    let out = ema(data.path(), &["export", "--session", &sid]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[EMPTY_SELECTION]"));
    let out = ema(data.path(), &["--json", "export", "--session", &sid]);
    assert_eq!(out.status.code(), Some(1));
    let err: ApiError = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err.code.as_str(), "EMPTY_SELECTION");

    let ids: Vec<&str> = run.candidates.candidates.iter().map(|c| c.id.as_str()).collect();
    let state: SessionState = json(
        data.path(),
        &["select", "--session", &sid, "--candidate", ids[1], "--candidate", ids[0], "--rank", "1", "--rank", "2"],
    );
    assert_eq!(state.selections[0].candidate_id, ids[1]);
    let exported: ExportResult = json(data.path(), &["export", "--session", &sid]);
    assert_eq!(exported.exports.len(), 2);
    assert_eq!(exported.session.step.number(), 7);
    for e in &exported.exports {
        assert!(Path::new(&e.artifact_path).starts_with(data.path().join("exports")));
        assert!(Path::new(&e.card_path).exists());
    }
    let shown: SessionState = json(data.path(), &["session", "--session", &sid]);
    assert_eq!(shown, exported.session);
}

#[test]
fn summarize_and_refine_round_trip() {
    let data = tempfile::tempdir().unwrap();
    let info = ingest(data.path(), "popular_kids");
    assert_eq!(info.row_count, 478);
    let summary: ema_core::dataset::DatasetSummary = json(data.path(), &["summarize", "--dataset", &info.dataset_id, "--bins", "4"]);
    assert_eq!(summary.bin_count, 4);
    assert_eq!(summary.columns.len(), 12);
    let specs: SpecList = json(data.path(), &["problems", "--dataset", &info.dataset_id]);
    let goal = specs.specs.iter().find(|s| s.target == "Goal" && s.metric.as_str() == "accuracy").unwrap();
    let refined: ProblemSpec = json(
        data.path(),
        &["refine", "--spec", &goal.id, "--remove-feature", "UrbanRural", "--remove-feature", "School", "--metric", "f1Macro"],
    );
    assert_eq!(refined.features.len(), goal.features.len() - 2);
    assert_eq!(refined.metric.as_str(), "f1Macro");
}

#[test]
fn flags_override_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let dir = fixtures_dir();
    let csv = dir.join("mixed_small.csv");
    let schema = dir.join("mixed_small.schema.json");
    let out = ema(
        env_dir.path(),
        &["--data-dir", flag_dir.path().to_str().unwrap(), "ingest", "--csv", csv.to_str().unwrap(), "--schema", schema.to_str().unwrap()],
    );
    assert!(out.status.success());
    assert!(flag_dir.path().join("datasets").read_dir().unwrap().count() == 2);
    assert!(!env_dir.path().join("datasets").exists() || env_dir.path().join("datasets").read_dir().unwrap().count() == 0);

    let info = ingest(env_dir.path(), "mixed_small");
    assert!(env_dir.path().join("datasets").join(format!("{}.csv", info.dataset_id)).exists());
}

#[test]
fn export_dir_from_environment() {
    let data = tempfile::tempdir().unwrap();
    let exports = tempfile::tempdir().unwrap();
    let info = ingest(data.path(), "mixed_small");
    let specs: SpecList = json(data.path(), &["problems", "--dataset", &info.dataset_id]);
    let spec = specs.specs.iter().find(|s| s.target == "width" && s.metric.as_str() == "mse").unwrap();
    let run: SearchRun = json(data.path(), &["search", "--spec", &spec.id, "--budget", "3", "--top-k", "1"]);
    json::<SessionState>(data.path(), &["select", "--session", &run.session.id, "--candidate", &run.candidates.candidates[0].id]);
    let out = Command::new(env!("CARGO_BIN_EXE_ema"))
        .args(["--json", "export", "--session", &run.session.id])
        .env("EMA_DATA_DIR", data.path())
        .env("EMA_EXPORT_DIR", exports.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result: ExportResult = serde_json::from_slice(&out.stdout).unwrap();
    assert!(Path::new(&result.exports[0].artifact_path).starts_with(exports.path()));
}

#[test]
fn usage_errors_exit_two() {
    let data = tempfile::tempdir().unwrap();
    let out = ema(data.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ema(data.path(), &["search", "--spec", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--budget"));
    let out = ema(data.path(), &["report", "--candidate", "cand-none"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[NOT_FOUND]"));
}
