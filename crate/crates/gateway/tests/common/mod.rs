#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use ema_gateway::{Store, StoreConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// `(csv text, schema json)` of a fixture.
pub fn fixture(name: &str) -> (String, Value) {
    let dir = fixtures_dir();
    let csv = std::fs::read_to_string(dir.join(format!("{name}.csv"))).unwrap();
    let schema = std::fs::read_to_string(dir.join(format!("{name}.schema.json"))).unwrap();
    (csv, serde_json::from_str(&schema).unwrap())
}

pub fn open_store(dir: &Path) -> Arc<Store> {
    Arc::new(Store::open(StoreConfig::new(dir)).unwrap())
}

pub struct Api {
    pub store: Arc<Store>,
    router: Router,
}

impl Api {
    pub fn new(dir: &Path) -> Api {
        let store = open_store(dir);
        Api { router: ema_gateway::api::router(store.clone()), store }
    }

    pub async fn raw(&self, method: &str, path: &str, body: Option<String>) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(path);
        if body.is_some() {
            req = req.header("content-type", "application/json");
        }
        let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
        (status, value)
    }

    pub async fn get(&self, path: &str) -> (StatusCode, Value) {
        self.raw("GET", path, None).await
    }

    pub async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        self.raw("POST", path, Some(body.to_string())).await
    }

    /// POST expecting `status`; returns the body.
    pub async fn ok(&self, path: &str, body: Value, status: u16) -> Value {
        let (got, v) = self.post(path, body).await;
        assert_eq!(got.as_u16(), status, "POST {path}: {v}");
        v
    }

    pub async fn fetch(&self, path: &str) -> Value {
        let (got, v) = self.get(path).await;
        assert_eq!(got, StatusCode::OK, "GET {path}: {v}");
        v
    }

    pub async fn upload(&self, name: &str) -> Value {
        let (csv, schema) = fixture(name);
        self.ok("/datasets", json!({"csv": csv, "schema": schema}), 201).await
    }

    pub async fn wait_done(&self, search_id: &str) -> Value {
        let deadline = std::time::Instant::now() + std::time::Duration::from_secs(120);
        loop {
            let status = self.fetch(&format!("/searches/{search_id}/status")).await;
            match status["state"].as_str().unwrap() {
                "done" | "failed" => return status,
                _ => assert!(std::time::Instant::now() < deadline, "search {search_id} did not finish"),
            }
            tokio::time::sleep(std::time::Duration::from_millis(20)).await;
        }
    }
}

/// The spec on `dataset` matching target and metric.
pub fn find_spec<'a>(specs: &'a Value, target: &str, metric: &str) -> &'a Value {
    specs["specs"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["target"] == target && s["metric"] == metric)
        .unwrap_or_else(|| panic!("no {target}/{metric} spec"))
}

/// Type name to documented field list, parsed from API.md.
pub fn documented_types() -> BTreeMap<String, Vec<String>> {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../API.md")).unwrap();
    let mut out = BTreeMap::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        if let Some(name) = line.strip_prefix("### ") {
            current = Some(name.trim().to_string());
        } else if let (Some(fields), Some(name)) = (line.strip_prefix("Fields: "), current.take()) {
            let fields = fields.split(',').map(|f| f.trim().trim_matches('`').to_string()).collect();
            out.insert(name, fields);
        }
    }
    out
}

/// `(method, path, response type)` rows of the endpoint table in API.md.
pub fn documented_endpoints() -> Vec<(String, String, String)> {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../API.md")).unwrap();
    let section = text.split("## Endpoints").nth(1).unwrap().split("## ").next().unwrap();
    section
        .lines()
        .filter(|l| l.starts_with("| GET") || l.starts_with("| POST"))
        .map(|l| {
            let cells: Vec<&str> = l.trim_matches('|').split('|').map(str::trim).collect();
            (cells[0].to_string(), cells[1].to_string(), cells[3].to_string())
        })
        .collect()
}

/// Check an object's keys against a documented field list.
pub fn check_fields(docs: &BTreeMap<String, Vec<String>>, ty: &str, value: &Value) {
    let fields = docs.get(ty).unwrap_or_else(|| panic!("type {ty} is not documented"));
    let obj = value.as_object().unwrap_or_else(|| panic!("{ty} is not an object: {value}"));
    let mut known = Vec::new();
    for f in fields {
        let (name, optional) = match f.strip_suffix('?') {
            Some(n) => (n, true),
            None => (f.strip_suffix("|null").unwrap_or(f), false),
        };
        known.push(name.to_string());
        if !optional {
            assert!(obj.contains_key(name), "{ty} lacks documented field `{name}`: {value}");
        }
    }
    for key in obj.keys() {
        assert!(known.contains(key), "{ty} has undocumented field `{key}`");
    }
}

/// Check `value` as `ty` and recurse into the nested types it is known to carry.
pub fn check_deep(docs: &BTreeMap<String, Vec<String>>, ty: &str, value: &Value) {
    check_fields(docs, ty, value);
    let each = |field: &str, inner: &str| {
        if let Some(items) = value.get(field).and_then(Value::as_array) {
            for item in items {
                check_deep(docs, inner, item);
            }
        }
    };
    let one = |field: &str, inner: &str| {
        if let Some(v) = value.get(field).filter(|v| !v.is_null()) {
            check_deep(docs, inner, v);
        }
    };
    match ty {
        "DatasetList" => each("datasets", "DatasetInfo"),
        "DatasetInfo" => {
            one("metadata", "DatasetMetadata");
            each("columns", "ColumnSchema");
        }
        "DatasetSummary" => each("columns", "ColumnSummary"),
        "TablePage" => each("rows", "TableRow"),
        "SpecList" => each("specs", "ProblemSpec"),
        "SearchSubmitted" => {
            one("status", "SearchStatus");
            one("session", "SessionState");
        }
        "CandidateList" => {
            one("split", "SplitPlan");
            each("candidates", "CandidateSummary");
            each("failures", "ConfigFailure");
        }
        "CandidateSummary" => one("descriptor", "PipelineDescriptor"),
        "EvalReport" => {
            each("perInstance", "InstanceRecord");
            one("confusion", "ConfusionMatrix");
        }
        "SessionState" => {
            each("eventLog", "LogEntry");
            each("exports", "ExportRecord");
        }
        "ExportResult" => {
            one("session", "SessionState");
            each("exports", "ExportRecord");
        }
        "ModelCard" => {
            one("spec", "ProblemSpec");
            one("descriptor", "PipelineDescriptor");
            one("split", "SplitDescription");
            one("dataset", "DatasetMetadata");
        }
        _ => {}
    }
}

/// A gateway on an ephemeral port, served from a background thread.
pub struct Server {
    pub addr: std::net::SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl Server {
    pub fn start(dir: &Path) -> Server {
        let store = open_store(dir);
        let std_listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        std_listener.set_nonblocking(true).unwrap();
        let addr = std_listener.local_addr().unwrap();
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(std_listener).unwrap();
                axum::serve(listener, ema_gateway::api::router(store))
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await
                    .unwrap();
            });
        });
        Server { addr, stop: Some(tx), thread: Some(thread) }
    }

    /// One HTTP/1.1 exchange over a fresh connection.
    pub fn call(&self, method: &str, path: &str, body: Option<&Value>) -> (u16, Value) {
        use std::io::{Read, Write};
        let mut stream = std::net::TcpStream::connect(self.addr).unwrap();
        stream.set_read_timeout(Some(std::time::Duration::from_secs(30))).unwrap();
        let body = body.map(|b| b.to_string()).unwrap_or_default();
        write!(
            stream,
            "{method} {path} HTTP/1.1\r\nHost: {}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
            self.addr,
            body.len()
        )
        .unwrap();
        let mut raw = Vec::new();
        stream.read_to_end(&mut raw).unwrap();
        let text = String::from_utf8(raw).unwrap();
        let (head, payload) = text.split_once("\r\n\r\n").unwrap();
        let status: u16 = head.split_whitespace().nth(1).unwrap().parse().unwrap();
        let payload = if head.to_ascii_lowercase().contains("transfer-encoding: chunked") { dechunk(payload) } else { payload.to_string() };
        let value = if payload.is_empty() { Value::Null } else { serde_json::from_str(&payload).unwrap() };
        (status, value)
    }
}

fn dechunk(mut s: &str) -> String {
    let mut out = String::new();
    loop {
        let (size, rest) = s.split_once("\r\n").unwrap();
        let n = usize::from_str_radix(size.trim(), 16).unwrap();
        if n == 0 {
            return out;
        }
        out.push_str(&rest[..n]);
        s = &rest[n + 2..];
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
