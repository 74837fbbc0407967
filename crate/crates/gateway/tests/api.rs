mod common;

use std::collections::BTreeSet;

use common::*;
use ema_gateway::api::ENDPOINTS;
use ema_gateway::wire::*;
use ema_gateway::ErrorCode;
use serde_json::{json, Value};

#[test]
fn endpoint_table_matches_router() {
    let documented: Vec<(String, String)> = documented_endpoints().into_iter().map(|(m, p, _)| (m, p)).collect();
    let served: Vec<(String, String)> = ENDPOINTS.iter().map(|(m, p)| (m.to_string(), p.to_string())).collect();
    assert_eq!(documented, served);
}

#[test]
fn error_code_table_matches() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../API.md")).unwrap();
    let section = text.split("## Error codes").nth(1).unwrap().split("## ").next().unwrap();
    let documented: Vec<(String, u16)> = section
        .lines()
        .filter(|l| l.starts_with("| ") && l.chars().nth(2).is_some_and(|c| c.is_ascii_uppercase()))
        .map(|l| {
            let cells: Vec<&str> = l.trim_matches('|').split('|').map(str::trim).collect();
            (cells[0].to_string(), cells[1].parse().unwrap())
        })
        .collect();
    let actual: Vec<(String, u16)> = ErrorCode::ALL.iter().map(|c| (c.as_str().to_string(), c.status().as_u16())).collect();
    assert_eq!(documented, actual);
    for code in ErrorCode::ALL {
        assert_eq!(serde_json::to_value(code).unwrap(), json!(code.as_str()));
    }
}

#[test]
fn request_types_match_documented_fields() {
    let docs = documented_types();
    let (csv, schema) = fixture("monthly_sales");
    let cases: Vec<(&str, Value)> = vec![
        ("UploadDataset", json!({"csv": csv, "schema": schema.clone()})),
        ("SchemaDoc", serde_json::to_value(ema_core::dataset::SchemaDoc::from_json(&schema.to_string()).unwrap()).unwrap()),
        (
            "CreateSpec",
            serde_json::to_value(CreateSpec {
                dataset_id: "ds".into(),
                task_type: ema_core::problemgen::TaskType::Regression,
                target: "y".into(),
                features: vec!["x".into()],
                metric: ema_core::problemgen::MetricId::Mse,
            })
            .unwrap(),
        ),
        (
            "SubmitSearch",
            serde_json::to_value(SubmitSearch {
                spec_id: "s".into(),
                budget: 1,
                top_k: 1,
                seed: 3,
                holdout_fraction: Some(0.3),
                session_id: Some("x".into()),
            })
            .unwrap(),
        ),
        ("CreateSession", serde_json::to_value(CreateSession { dataset_id: "d".into(), session_id: Some("s".into()) }).unwrap()),
        ("AdvanceSession", serde_json::to_value(AdvanceSession { event: ema_core::session::WorkflowEvent::RetryProblem }).unwrap()),
        ("SetActiveSpec", serde_json::to_value(SetActiveSpec { spec_id: "s".into() }).unwrap()),
        ("SelectCandidates", serde_json::to_value(SelectCandidates { candidate_ids: vec![], user_ranks: vec![] }).unwrap()),
        (
            "SpecEdits",
            serde_json::to_value(ema_core::problemgen::SpecEdits {
                remove_features: vec![],
                set_metric: Some(ema_core::problemgen::MetricId::Mae),
            })
            .unwrap(),
        ),
        ("RowSelector", serde_json::to_value(ema_core::dataset::RowSelector::bin("y", 0, 4)).unwrap()),
        ("RowSelector", serde_json::to_value(ema_core::dataset::RowSelector::label("c", "a")).unwrap()),
    ];
    for (ty, value) in &cases {
        check_fields(&docs, ty, value);
    }
    check_fields(&docs, "ColumnSchema", &schema["columns"][0]);
}

/// Walk the whole workflow on a small classification dataset, checking every response against API.md.
#[tokio::test]
async fn responses_match_documented_fields() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    let docs = documented_types();
    let table: Vec<(String, String, String)> = documented_endpoints();
    let response_type = |method: &str, path: &str| table.iter().find(|(m, p, _)| m == method && p == path).unwrap().2.clone();
    let mut seen = BTreeSet::new();
    let mut check = |method: &str, path: &str, value: &Value| {
        check_deep(&docs, &response_type(method, path), value);
        seen.insert((method.to_string(), path.to_string()));
    };

    check("GET", "/health", &api.fetch("/health").await);
    let info = api.upload("mixed_small").await;
    check("POST", "/datasets", &info);
    let ds = info["datasetId"].as_str().unwrap().to_string();
    check("GET", "/datasets", &api.fetch("/datasets").await);
    check("GET", "/datasets/{id}", &api.fetch(&format!("/datasets/{ds}")).await);
    check("GET", "/datasets/{id}/summary", &api.fetch(&format!("/datasets/{ds}/summary?bins=4")).await);
    let rows = api.ok(&format!("/datasets/{ds}/rows"), json!({"column": "species", "label": "b"}), 200).await;
    check("POST", "/datasets/{id}/rows", &rows);
    check("GET", "/datasets/{id}/table", &api.fetch(&format!("/datasets/{ds}/table?offset=5&limit=3")).await);
    let specs = api.fetch(&format!("/datasets/{ds}/specs")).await;
    check("GET", "/datasets/{id}/specs", &specs);
    let created = api
        .ok(
            "/specs",
            json!({"datasetId": ds, "taskType": "classification", "target": "species", "features": ["length"], "metric": "accuracy"}),
            201,
        )
        .await;
    check("POST", "/specs", &created);
    let spec = find_spec(&specs, "species", "f1Macro")["id"].as_str().unwrap().to_string();
    check("GET", "/specs/{id}", &api.fetch(&format!("/specs/{spec}")).await);
    let refined = api.ok(&format!("/specs/{spec}/refine"), json!({"setMetric": "accuracy"}), 201).await;
    check("POST", "/specs/{id}/refine", &refined);
    let spec = refined["id"].as_str().unwrap().to_string();

    let session = api.ok("/sessions", json!({"datasetId": ds}), 201).await;
    check("POST", "/sessions", &session);
    let sid = session["id"].as_str().unwrap().to_string();
    for event in ["exploreProblems", "specifyProblem"] {
        check("POST", "/sessions/{id}/advance", &api.ok(&format!("/sessions/{sid}/advance"), json!({"event": event}), 200).await);
    }
    check("POST", "/sessions/{id}/spec", &api.ok(&format!("/sessions/{sid}/spec"), json!({"specId": spec}), 200).await);
    let submitted = api
        .ok("/searches", json!({"specId": spec, "budget": 6, "topK": 3, "seed": 5, "holdoutFraction": 0.25, "sessionId": sid}), 202)
        .await;
    check("POST", "/searches", &submitted);
    assert_eq!(submitted["session"]["step"], "modelTraining");
    let search = submitted["searchId"].as_str().unwrap().to_string();
    let status = api.wait_done(&search).await;
    assert_eq!(status["state"], "done");
    check("GET", "/searches/{id}/status", &status);
    let list = api.fetch(&format!("/searches/{search}/candidates")).await;
    check("GET", "/searches/{id}/candidates", &list);
    let top = list["candidates"][0]["id"].as_str().unwrap().to_string();
    let report = api.fetch(&format!("/candidates/{top}/report")).await;
    check("GET", "/candidates/{id}/report", &report);
    assert!(report["confusion"].is_object());

    for event in ["exploreModels", "selectModels"] {
        api.ok(&format!("/sessions/{sid}/advance"), json!({"event": event}), 200).await;
    }
    let selected = api.ok(&format!("/sessions/{sid}/select"), json!({"candidateIds": [top], "userRanks": [1]}), 200).await;
    check("POST", "/sessions/{id}/select", &selected);
    let exported = api.ok(&format!("/sessions/{sid}/export"), json!({}), 200).await;
    check("POST", "/sessions/{id}/export", &exported);
    assert_eq!(exported["session"]["step"], "exportModels");
    check("GET", "/sessions/{id}", &api.fetch(&format!("/sessions/{sid}")).await);

    let card: Value = serde_json::from_str(&std::fs::read_to_string(exported["exports"][0]["cardPath"].as_str().unwrap()).unwrap()).unwrap();
    assert_eq!(card["format"], "ema-model-card");
    check_deep(&docs, "ModelCard", &card["card"]);
    let artifact: Value =
        serde_json::from_str(&std::fs::read_to_string(exported["exports"][0]["artifactPath"].as_str().unwrap()).unwrap()).unwrap();
    assert_eq!(artifact["format"], "ema-model-artifact");
    assert!(artifact["checksum"].as_str().unwrap().starts_with("sha256:"));
    check_deep(&docs, "ModelCard", &artifact["payload"]["modelCard"]);
    assert!(artifact["payload"]["modelCard"].get("trainingSeconds").is_none());

    let (_, err) = api.get("/datasets/nope").await;
    check_fields(&docs, "ApiError", &err);

    let all: BTreeSet<(String, String)> = ENDPOINTS.iter().map(|(m, p)| (m.to_string(), p.to_string())).collect();
    assert_eq!(seen, all, "every endpoint is exercised");
}

#[tokio::test]
async fn upload_popular_kids_reports_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    let info = api.upload("popular_kids").await;
    assert_eq!(info["rowCount"], 478);
    assert!(info["datasetId"].as_str().unwrap().starts_with("ds-"));
    let again = api.upload("popular_kids").await;
    assert_eq!(again["datasetId"], info["datasetId"]);
    assert_eq!(api.fetch("/health").await["datasets"], 1);
}

#[tokio::test]
async fn rows_selector_links_summary_bins() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    let ds = api.upload("auto_mpg").await["datasetId"].as_str().unwrap().to_string();
    let summary = api.fetch(&format!("/datasets/{ds}/summary?bins=5")).await;
    let weight = summary["columns"].as_array().unwrap().iter().find(|c| c["name"] == "weight").unwrap();
    assert_eq!(weight["detail"]["type"], "histogram");
    let counts: Vec<u64> = weight["detail"]["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).collect();
    let mut union = BTreeSet::new();
    for (i, &n) in counts.iter().enumerate() {
        let rows = api.ok(&format!("/datasets/{ds}/rows"), json!({"column": "weight", "binIndex": i, "binCount": 5}), 200).await;
        let ids = rows["rowIds"].as_array().unwrap();
        assert_eq!(ids.len() as u64, n, "bin {i}");
        union.extend(ids.iter().map(|r| r.as_u64().unwrap()));
    }
    assert_eq!(union.len(), 398);
    let table = api.fetch(&format!("/datasets/{ds}/table?offset=396&limit=10")).await;
    assert_eq!(table["total"], 398);
    assert_eq!(table["rows"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn errors_map_to_codes() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    let code = |v: &Value| v["code"].as_str().unwrap().to_string();

    let (s, v) = api.get("/datasets/ds-missing").await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (404, "NOT_FOUND"));
    let (s, v) = api.get("/no/such/route").await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (404, "NOT_FOUND"));
    let (s, v) = api.raw("DELETE", "/health", None).await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (405, "BAD_REQUEST"));
    let (s, v) = api.raw("POST", "/datasets", Some("{not json".into())).await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (400, "BAD_REQUEST"));
    let (s, v) = api.post("/searches", json!({"specId": 4})).await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (400, "BAD_REQUEST"));

    let (csv, schema) = fixture("mixed_small");
    let (s, v) = api.post("/datasets", json!({"csv": "species,length\n", "schema": schema})).await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (422, "DATASET_INVALID"), "{v}");

    let ds = api.ok("/datasets", json!({"csv": csv, "schema": schema}), 201).await["datasetId"].as_str().unwrap().to_string();
    let (s, v) = api.get(&format!("/datasets/{ds}/summary?bins=0")).await;
    assert_eq!(s.as_u16(), 400, "{v}");
    let (s, v) = api
        .post(
            "/specs",
            json!({"datasetId": ds, "taskType": "regression", "target": "species", "features": ["species"], "metric": "accuracy"}),
        )
        .await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (422, "SPEC_INVALID"));
    assert!(v["details"]["violations"].as_array().unwrap().len() >= 2, "{v}");

    let sid = api.ok("/sessions", json!({"datasetId": ds, "sessionId": "s1"}), 201).await["id"].as_str().unwrap().to_string();
    let (s, v) = api.post(&format!("/sessions/{sid}/advance"), json!({"event": "selectModels"})).await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (409, "WORKFLOW_ILLEGAL_TRANSITION"));
    assert_eq!(v["details"]["from"], "dataExploration");
    assert_eq!(v["details"]["to"], "modelSelection");
    let (s, v) = api.post(&format!("/sessions/{sid}/advance"), json!({"event": "teleport"})).await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (400, "BAD_REQUEST"));
    for event in ["exploreProblems", "specifyProblem"] {
        api.ok(&format!("/sessions/{sid}/advance"), json!({"event": event}), 200).await;
    }
    let (s, v) = api.post(&format!("/sessions/{sid}/advance"), json!({"event": "startTraining"})).await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (409, "WORKFLOW_PRECONDITION"));
    let (s, v) = api.post(&format!("/sessions/{sid}/export"), json!({})).await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (409, "EMPTY_SELECTION"));
    let (s, v) = api.post("/searches", json!({"specId": "spec-missing", "budget": 1, "topK": 1})).await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (404, "NOT_FOUND"));

    let specs = api.fetch(&format!("/datasets/{ds}/specs")).await;
    let spec = find_spec(&specs, "species", "accuracy")["id"].as_str().unwrap().to_string();
    let (s, v) = api.post("/searches", json!({"specId": spec, "budget": 0, "topK": 1})).await;
    assert_eq!(s.as_u16(), 400, "{v}");
    let search = api.ok("/searches", json!({"specId": spec, "budget": 4, "topK": 2, "sessionId": sid}), 202).await;
    let search = search["searchId"].as_str().unwrap().to_string();
    api.wait_done(&search).await;
    for event in ["exploreModels", "selectModels"] {
        api.ok(&format!("/sessions/{sid}/advance"), json!({"event": event}), 200).await;
    }
    let list = api.fetch(&format!("/searches/{search}/candidates")).await;
    let a = list["candidates"][0]["id"].as_str().unwrap();
    let b = list["candidates"][1]["id"].as_str().unwrap();
    let (s, v) = api.post(&format!("/sessions/{sid}/select"), json!({"candidateIds": ["cand-nope"], "userRanks": [1]})).await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (422, "SELECTION_INVALID"));
    let (s, v) = api.post(&format!("/sessions/{sid}/select"), json!({"candidateIds": [a, b], "userRanks": [1, 1]})).await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (422, "SELECTION_INVALID"));
    let (s, v) = api.post(&format!("/sessions/{sid}/export"), json!({})).await;
    assert_eq!((s.as_u16(), code(&v).as_str()), (409, "EMPTY_SELECTION"));
    let (s, _) = api.get("/candidates/cand-nope/report").await;
    assert_eq!(s.as_u16(), 404);
    let (s, _) = api.get("/searches/search-nope/status").await;
    assert_eq!(s.as_u16(), 404);
}

#[tokio::test]
async fn resubmitting_a_search_is_idempotent_and_pages_retained_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    let ds = api.upload("auto_mpg").await["datasetId"].as_str().unwrap().to_string();
    let specs = api.fetch(&format!("/datasets/{ds}/specs")).await;
    let spec = find_spec(&specs, "mpg", "mse")["id"].as_str().unwrap().to_string();
    let body = json!({"specId": spec, "budget": 8, "topK": 2, "seed": 1});
    let first = api.ok("/searches", body.clone(), 202).await;
    let second = api.ok("/searches", body, 202).await;
    assert_eq!(first["searchId"], second["searchId"]);
    let search = first["searchId"].as_str().unwrap().to_string();
    api.wait_done(&search).await;
    assert_eq!(api.fetch("/health").await["searches"], 1);

    let top = api.fetch(&format!("/searches/{search}/candidates")).await;
    assert_eq!(top["returned"], 2);
    assert_eq!(top["candidates"].as_array().unwrap().len(), 2);
    let retained = top["retained"].as_u64().unwrap() as usize;
    assert_eq!(retained, 8);
    let all = api.fetch(&format!("/searches/{search}/candidates?offset=0&limit=100")).await;
    let ranks: Vec<u64> = all["candidates"].as_array().unwrap().iter().map(|c| c["rank"].as_u64().unwrap()).collect();
    assert_eq!(ranks, (1..=retained as u64).collect::<Vec<_>>());
    let page = api.fetch(&format!("/searches/{search}/candidates?offset=3&limit=2")).await;
    assert_eq!(page["candidates"][0], all["candidates"][3]);
    assert_eq!(page["offset"], 3);
}

#[tokio::test]
async fn restart_reproduces_read_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let reads;
    let before;
    {
        let api = Api::new(dir.path());
        let ds = api.upload("popular_kids").await["datasetId"].as_str().unwrap().to_string();
        let specs = api.fetch(&format!("/datasets/{ds}/specs")).await;
        let spec = find_spec(&specs, "Goal", "accuracy")["id"].as_str().unwrap().to_string();
        let refined = api.ok(&format!("/specs/{spec}/refine"), json!({"removeFeatures": ["UrbanRural", "School"]}), 201).await;
        let spec = refined["id"].as_str().unwrap().to_string();
        let sid = api.ok("/sessions", json!({"datasetId": ds, "sessionId": "restart"}), 201).await["id"].as_str().unwrap().to_string();
        for event in ["exploreProblems", "specifyProblem"] {
            api.ok(&format!("/sessions/{sid}/advance"), json!({"event": event}), 200).await;
        }
        let search = api.ok("/searches", json!({"specId": spec, "budget": 5, "topK": 3, "sessionId": sid}), 202).await["searchId"]
            .as_str()
            .unwrap()
            .to_string();
        api.wait_done(&search).await;
        api.ok(&format!("/sessions/{sid}/advance"), json!({"event": "exploreModels"}), 200).await;
        let list = api.fetch(&format!("/searches/{search}/candidates")).await;
        let cand = list["candidates"][1]["id"].as_str().unwrap().to_string();
        reads = vec![
            "/health".to_string(),
            "/datasets".into(),
            format!("/datasets/{ds}"),
            format!("/datasets/{ds}/summary?bins=6"),
            format!("/datasets/{ds}/table?offset=10&limit=4"),
            format!("/datasets/{ds}/specs"),
            format!("/specs/{spec}"),
            format!("/searches/{search}/status"),
            format!("/searches/{search}/candidates"),
            format!("/searches/{search}/candidates?offset=1&limit=50"),
            format!("/candidates/{cand}/report"),
            format!("/sessions/{sid}"),
        ];
        let mut out = Vec::new();
        for path in &reads {
            out.push(api.fetch(path).await);
        }
        before = out;
    }
    let api = Api::new(dir.path());
    for (path, expected) in reads.iter().zip(&before) {
        assert_eq!(&api.fetch(path).await, expected, "{path} differs after restart");
    }
    let after = api.ok("/sessions/restart/advance", json!({"event": "selectModels"}), 200).await;
    assert_eq!(after["step"], "modelSelection");
}

#[tokio::test]
async fn retry_problem_keeps_searches_and_allows_a_new_spec() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    let ds = api.upload("mixed_small").await["datasetId"].as_str().unwrap().to_string();
    let specs = api.fetch(&format!("/datasets/{ds}/specs")).await;
    let first = find_spec(&specs, "species", "accuracy")["id"].as_str().unwrap().to_string();
    let second = find_spec(&specs, "length", "mae")["id"].as_str().unwrap().to_string();
    let sid = api.ok("/sessions", json!({"datasetId": ds}), 201).await["id"].as_str().unwrap().to_string();
    for event in ["exploreProblems", "specifyProblem"] {
        api.ok(&format!("/sessions/{sid}/advance"), json!({"event": event}), 200).await;
    }
    let s1 = api.ok("/searches", json!({"specId": first, "budget": 3, "topK": 2, "sessionId": sid}), 202).await;
    api.wait_done(s1["searchId"].as_str().unwrap()).await;
    api.ok(&format!("/sessions/{sid}/advance"), json!({"event": "exploreModels"}), 200).await;
    let back = api.ok(&format!("/sessions/{sid}/advance"), json!({"event": "retryProblem"}), 200).await;
    assert_eq!(back["step"], "problemSpecification");
    assert_eq!(back["searches"].as_array().unwrap().len(), 1);
    let s2 = api.ok("/searches", json!({"specId": second, "budget": 3, "topK": 2, "sessionId": sid}), 202).await;
    api.wait_done(s2["searchId"].as_str().unwrap()).await;
    let state = api.fetch(&format!("/sessions/{sid}")).await;
    assert_eq!(state["searches"].as_array().unwrap().len(), 2);
    assert_eq!(state["activeSpecId"], second);
    let log: Vec<&str> = state["eventLog"].as_array().unwrap().iter().map(|e| e["event"].as_str().unwrap()).collect();
    assert_eq!(log, ["exploreProblems", "specifyProblem", "startTraining", "exploreModels", "retryProblem", "startTraining"]);
}
