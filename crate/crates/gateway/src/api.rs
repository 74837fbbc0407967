//! HTTP routes. Every handler delegates to one [`Store`] operation.

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, FromRequest, FromRequestParts, Path, Request, State};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use ema_core::dataset::RowSelector;
use ema_core::problemgen::SpecEdits;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ErrorCode};
use crate::store::Store;
use crate::wire::*;

/// (method, path) of every route, in the order of the API reference.
pub const ENDPOINTS: &[(&str, &str)] = &[
    ("GET", "/health"),
    ("GET", "/datasets"),
    ("POST", "/datasets"),
    ("GET", "/datasets/{id}"),
    ("GET", "/datasets/{id}/summary"),
    ("POST", "/datasets/{id}/rows"),
    ("GET", "/datasets/{id}/table"),
    ("GET", "/datasets/{id}/specs"),
    ("POST", "/specs"),
    ("GET", "/specs/{id}"),
    ("POST", "/specs/{id}/refine"),
    ("POST", "/searches"),
    ("GET", "/searches/{id}/status"),
    ("GET", "/searches/{id}/candidates"),
    ("GET", "/candidates/{id}/report"),
    ("POST", "/sessions"),
    ("GET", "/sessions/{id}"),
    ("POST", "/sessions/{id}/advance"),
    ("POST", "/sessions/{id}/spec"),
    ("POST", "/sessions/{id}/select"),
    ("POST", "/sessions/{id}/export"),
];

pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(rejection) => Err(json_rejection(rejection)),
        }
    }
}

fn json_rejection(r: JsonRejection) -> ApiError {
    ApiError::bad_request(format!("malformed request body: {}", r.body_text()))
}

pub struct Params<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Params<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        match axum::extract::Query::<T>::from_request_parts(parts, state).await {
            Ok(q) => Ok(Params(q.0)),
            Err(r) => Err(query_rejection(r)),
        }
    }
}

fn query_rejection(r: QueryRejection) -> ApiError {
    ApiError::bad_request(format!("malformed query string: {}", r.body_text()))
}

type Shared = State<Arc<Store>>;
type Reply<T> = Result<Json<T>, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Reply<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?.map(Json)
}

#[derive(Debug, Default, Deserialize)]
struct BinsQuery {
    bins: Option<usize>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
struct PageQuery {
    offset: Option<usize>,
    limit: Option<usize>,
}

async fn health(State(store): Shared) -> Json<Health> {
    Json(store.health())
}

async fn list_datasets(State(store): Shared) -> Json<DatasetList> {
    Json(store.list_datasets())
}

async fn upload(State(store): Shared, Body(body): Body<UploadDataset>) -> Result<impl IntoResponse, ApiError> {
    let info = blocking(move || store.upload_dataset(body)).await?;
    Ok((StatusCode::CREATED, info))
}

async fn dataset(State(store): Shared, Path(id): Path<String>) -> Reply<DatasetInfo> {
    store.dataset_info(&id).map(Json)
}

async fn summary(State(store): Shared, Path(id): Path<String>, Params(q): Params<BinsQuery>) -> Reply<ema_core::dataset::DatasetSummary> {
    blocking(move || store.summary(&id, q.bins)).await
}

async fn rows(State(store): Shared, Path(id): Path<String>, Body(sel): Body<RowSelector>) -> Reply<RowSet> {
    blocking(move || store.rows(&id, &sel)).await
}

async fn table(State(store): Shared, Path(id): Path<String>, Params(q): Params<PageQuery>) -> Reply<TablePage> {
    blocking(move || store.table(&id, q.offset, q.limit)).await
}

async fn dataset_specs(State(store): Shared, Path(id): Path<String>) -> Reply<SpecList> {
    blocking(move || store.enumerate(&id)).await
}

async fn create_spec(State(store): Shared, Body(body): Body<CreateSpec>) -> Result<impl IntoResponse, ApiError> {
    let spec = blocking(move || store.create_spec(body)).await?;
    Ok((StatusCode::CREATED, spec))
}

async fn spec(State(store): Shared, Path(id): Path<String>) -> Reply<ema_core::problemgen::ProblemSpec> {
    store.spec(&id).map(Json)
}

async fn refine(State(store): Shared, Path(id): Path<String>, Body(edits): Body<SpecEdits>) -> Result<impl IntoResponse, ApiError> {
    let spec = blocking(move || store.refine(&id, &edits)).await?;
    Ok((StatusCode::CREATED, spec))
}

async fn submit(State(store): Shared, Body(body): Body<SubmitSearch>) -> Result<impl IntoResponse, ApiError> {
    let submitted = blocking(move || store.submit_search(body)).await?;
    Ok((StatusCode::ACCEPTED, submitted))
}

async fn status(State(store): Shared, Path(id): Path<String>) -> Reply<ema_core::search::SearchStatus> {
    store.search_status(&id).map(Json)
}

async fn candidates(State(store): Shared, Path(id): Path<String>, Params(q): Params<PageQuery>) -> Reply<CandidateList> {
    blocking(move || store.candidates(&id, q.offset, q.limit)).await
}

async fn report(State(store): Shared, Path(id): Path<String>) -> Reply<ema_core::evaluation::EvalReport> {
    blocking(move || store.report(&id)).await
}

async fn create_session(State(store): Shared, Body(body): Body<CreateSession>) -> Result<impl IntoResponse, ApiError> {
    let state = blocking(move || store.create_session(body)).await?;
    Ok((StatusCode::CREATED, state))
}

async fn session(State(store): Shared, Path(id): Path<String>) -> Reply<ema_core::session::SessionState> {
    store.session(&id).map(Json)
}

async fn advance(State(store): Shared, Path(id): Path<String>, Body(body): Body<AdvanceSession>) -> Reply<ema_core::session::SessionState> {
    blocking(move || store.advance(&id, body.event)).await
}

async fn set_spec(State(store): Shared, Path(id): Path<String>, Body(body): Body<SetActiveSpec>) -> Reply<ema_core::session::SessionState> {
    blocking(move || store.set_active_spec(&id, &body.spec_id)).await
}

async fn select(State(store): Shared, Path(id): Path<String>, Body(body): Body<SelectCandidates>) -> Reply<ema_core::session::SessionState> {
    blocking(move || store.select(&id, &body)).await
}

async fn export(State(store): Shared, Path(id): Path<String>) -> Reply<ExportResult> {
    blocking(move || store.export(&id)).await
}

async fn not_found() -> ApiError {
    ApiError::new(ErrorCode::NotFound, "no such endpoint")
}

async fn method_not_allowed() -> impl IntoResponse {
    (StatusCode::METHOD_NOT_ALLOWED, Json(ApiError::bad_request("method not allowed for this endpoint")))
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/datasets", get(list_datasets).post(upload))
        .route("/datasets/{id}", get(dataset))
        .route("/datasets/{id}/summary", get(summary))
        .route("/datasets/{id}/rows", post(rows))
        .route("/datasets/{id}/table", get(table))
        .route("/datasets/{id}/specs", get(dataset_specs))
        .route("/specs", post(create_spec))
        .route("/specs/{id}", get(spec))
        .route("/specs/{id}/refine", post(refine))
        .route("/searches", post(submit))
        .route("/searches/{id}/status", get(status))
        .route("/searches/{id}/candidates", get(candidates))
        .route("/candidates/{id}/report", get(report))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session))
        .route("/sessions/{id}/advance", post(advance))
        .route("/sessions/{id}/spec", post(set_spec))
        .route("/sessions/{id}/select", post(select))
        .route("/sessions/{id}/export", post(export))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(DefaultBodyLimit::max(64 * 1024 * 1024))
        .with_state(store)
}

/// Serve until ctrl-c.
pub async fn serve(store: Arc<Store>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
