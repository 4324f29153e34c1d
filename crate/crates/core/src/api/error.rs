use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use crate::memory::MemoryError;
use crate::model::{ValidationError, ValidationErrors};
use crate::session::{Conflict, SessionError};

#[derive(Debug)]
pub enum ApiError {
    Unauthorized,
    BadRequest(String),
    NotFound(String),
    Conflict(Conflict),
    Gone(String),
    UnsupportedMediaType,
    Unprocessable(Vec<ValidationError>),
    Internal(String),
}

impl ApiError {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError::Unprocessable(vec![ValidationError::new(path, message)])
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::Unauthorized => StatusCode::UNAUTHORIZED,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Gone(_) => StatusCode::GONE,
            ApiError::UnsupportedMediaType => StatusCode::UNSUPPORTED_MEDIA_TYPE,
            ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<ValidationErrors> for ApiError {
    fn from(e: ValidationErrors) -> Self {
        ApiError::Unprocessable(e.errors)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::UnknownSession(_) => ApiError::NotFound(e.to_string()),
            SessionError::Terminal(_) => ApiError::Gone(e.to_string()),
            SessionError::Reduce(ref r) => ApiError::invalid(r.path(), e.to_string()),
            SessionError::KindMismatch { .. } => ApiError::invalid("artifact.kind", e.to_string()),
            SessionError::InvalidArtifact(errors) => ApiError::Unprocessable(
                errors
                    .errors
                    .into_iter()
                    .map(|v| ValidationError::new(v.path.replacen("payload", "artifact", 1), v.message))
                    .collect(),
            ),
            SessionError::Conflict { conflict, .. } => ApiError::Conflict(*conflict),
            SessionError::BadDecision => ApiError::invalid("decision", e.to_string()),
            SessionError::Storage(_) | SessionError::Replay(_) => ApiError::Internal(e.to_string()),
        }
    }
}

impl From<MemoryError> for ApiError {
    fn from(e: MemoryError) -> Self {
        match e {
            MemoryError::EmptyReason => ApiError::invalid("reason", e.to_string()),
            MemoryError::EmptyDraft => ApiError::invalid("summary_draft", e.to_string()),
            MemoryError::UnknownEntry(_) => ApiError::NotFound(e.to_string()),
            MemoryError::NotApproved(_) | MemoryError::KindMismatch(_) => ApiError::invalid("session_id", e.to_string()),
            MemoryError::DuplicateEntry { .. } | MemoryError::Malformed { .. } => {
                ApiError::Internal(format!("memory file: {e}"))
            }
            MemoryError::Io { .. } => ApiError::Internal(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        match self {
            ApiError::Unauthorized => status.into_response(),
            ApiError::UnsupportedMediaType => {
                (status, Json(json!({ "error": "content type must be application/json" }))).into_response()
            }
            ApiError::Unprocessable(errors) => (status, Json(json!({ "errors": errors }))).into_response(),
            ApiError::Conflict(conflict) => (status, Json(conflict)).into_response(),
            ApiError::BadRequest(m) | ApiError::NotFound(m) | ApiError::Gone(m) | ApiError::Internal(m) => {
                if status.is_server_error() {
                    tracing::error!(error = %m, "request failed");
                }
                (status, Json(json!({ "error": m }))).into_response()
            }
        }
    }
}
