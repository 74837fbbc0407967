use std::fmt;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use ema_core::dataset::DatasetError;
use ema_core::evaluation::EvalError;
use ema_core::problemgen::SpecError;
use ema_core::search::SearchError;
use ema_core::session::SessionError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

/// The closed set of machine-readable error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    DatasetInvalid,
    SpecInvalid,
    SearchPending,
    SearchFailed,
    WorkflowIllegalTransition,
    WorkflowPrecondition,
    SelectionInvalid,
    EmptySelection,
    ExportFailed,
    ArtifactCorrupt,
    ArtifactVersion,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 14] = [
        ErrorCode::BadRequest,
        ErrorCode::NotFound,
        ErrorCode::DatasetInvalid,
        ErrorCode::SpecInvalid,
        ErrorCode::SearchPending,
        ErrorCode::SearchFailed,
        ErrorCode::WorkflowIllegalTransition,
        ErrorCode::WorkflowPrecondition,
        ErrorCode::SelectionInvalid,
        ErrorCode::EmptySelection,
        ErrorCode::ExportFailed,
        ErrorCode::ArtifactCorrupt,
        ErrorCode::ArtifactVersion,
        ErrorCode::Internal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::BadRequest => "BAD_REQUEST",
            ErrorCode::NotFound => "NOT_FOUND",
            ErrorCode::DatasetInvalid => "DATASET_INVALID",
            ErrorCode::SpecInvalid => "SPEC_INVALID",
            ErrorCode::SearchPending => "SEARCH_PENDING",
            ErrorCode::SearchFailed => "SEARCH_FAILED",
            ErrorCode::WorkflowIllegalTransition => "WORKFLOW_ILLEGAL_TRANSITION",
            ErrorCode::WorkflowPrecondition => "WORKFLOW_PRECONDITION",
            ErrorCode::SelectionInvalid => "SELECTION_INVALID",
            ErrorCode::EmptySelection => "EMPTY_SELECTION",
            ErrorCode::ExportFailed => "EXPORT_FAILED",
            ErrorCode::ArtifactCorrupt => "ARTIFACT_CORRUPT",
            ErrorCode::ArtifactVersion => "ARTIFACT_VERSION",
            ErrorCode::Internal => "INTERNAL",
        }
    }

    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::DatasetInvalid
            | ErrorCode::SpecInvalid
            | ErrorCode::SearchFailed
            | ErrorCode::SelectionInvalid
            | ErrorCode::ArtifactCorrupt
            | ErrorCode::ArtifactVersion => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::SearchPending
            | ErrorCode::WorkflowIllegalTransition
            | ErrorCode::WorkflowPrecondition
            | ErrorCode::EmptySelection => StatusCode::CONFLICT,
            ErrorCode::ExportFailed | ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Map<String, Value>>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError { code, message: message.into(), details: None }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        if let Value::Object(map) = details {
            self.details = Some(map);
        }
        self
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(ErrorCode::NotFound, format!("{what} `{id}` not found")).with_details(json!({ "id": id }))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::BadRequest, message)
    }

    pub fn internal(message: impl fmt::Display) -> Self {
        ApiError::new(ErrorCode::Internal, message.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

impl From<DatasetError> for ApiError {
    fn from(e: DatasetError) -> Self {
        let message = e.to_string();
        match e {
            DatasetError::UnknownColumn(column) => {
                ApiError::new(ErrorCode::BadRequest, message).with_details(json!({ "column": column }))
            }
            DatasetError::BinOutOfRange { index, bin_count } => {
                ApiError::new(ErrorCode::BadRequest, message).with_details(json!({ "binIndex": index, "binCount": bin_count }))
            }
            DatasetError::SelectorKind { column, .. } => {
                ApiError::new(ErrorCode::BadRequest, message).with_details(json!({ "column": column }))
            }
            DatasetError::Unparseable { row_id, column, .. } => {
                ApiError::new(ErrorCode::DatasetInvalid, message).with_details(json!({ "rowId": row_id, "column": column }))
            }
            _ => ApiError::new(ErrorCode::DatasetInvalid, message),
        }
    }
}

impl From<SpecError> for ApiError {
    fn from(e: SpecError) -> Self {
        let violations = serde_json::to_value(e.violations()).unwrap_or(Value::Null);
        ApiError::new(ErrorCode::SpecInvalid, e.to_string()).with_details(json!({ "violations": violations }))
    }
}

impl From<SearchError> for ApiError {
    fn from(e: SearchError) -> Self {
        match &e {
            SearchError::InvalidRequest => ApiError::bad_request(e.to_string()),
            SearchError::AllFailed(failures) => ApiError::new(ErrorCode::SearchFailed, e.to_string())
                .with_details(json!({ "failures": serde_json::to_value(failures).unwrap_or(Value::Null) })),
            _ => ApiError::new(ErrorCode::SearchFailed, e.to_string()),
        }
    }
}

impl From<EvalError> for ApiError {
    fn from(e: EvalError) -> Self {
        ApiError::new(ErrorCode::SearchFailed, e.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::IllegalTransition { from, to, event } => ApiError::new(ErrorCode::WorkflowIllegalTransition, message)
                .with_details(json!({ "from": from, "to": to, "event": event })),
            SessionError::Precondition(_) | SessionError::WrongStep { .. } => ApiError::new(ErrorCode::WorkflowPrecondition, message),
            SessionError::UnknownCandidate(_)
            | SessionError::DuplicateRank(_)
            | SessionError::DuplicateCandidate(_)
            | SessionError::InvalidRank
            | SessionError::RankCount { .. } => ApiError::new(ErrorCode::SelectionInvalid, message),
            SessionError::EmptySelection => ApiError::new(ErrorCode::EmptySelection, message),
            SessionError::Io { .. } => ApiError::new(ErrorCode::ExportFailed, message),
            SessionError::VersionMismatch { found, supported } => ApiError::new(ErrorCode::ArtifactVersion, message)
                .with_details(json!({ "found": found, "supported": supported })),
            SessionError::Corrupt(_) => ApiError::new(ErrorCode::ArtifactCorrupt, message),
        }
    }
}
