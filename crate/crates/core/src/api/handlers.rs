use std::collections::HashMap;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::error::ApiError;
use super::AppState;
use crate::ids::{self, Millis};
use crate::memory::{self, EntryDraft, MemoryFile, Summary};
use crate::model::{decode_artifact, validate_proposal, Decision, MemoryEntry, ProposalKind, ReviewAction};
use crate::session::{PollResult, SessionState};

pub const REVISION_HEADER: &str = "x-agentclick-revision";

type ApiResult<T = Response> = Result<T, ApiError>;

/// Reads a JSON request body. Empty bodies are a validation error, not a
/// content-type error.
fn json_body(headers: &HeaderMap, body: &Bytes) -> ApiResult<Value> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Err(ApiError::invalid("", "request body is empty"));
    }
    let is_json = headers
        .get(CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.split(';').next())
        .is_some_and(|v| v.trim().eq_ignore_ascii_case("application/json"));
    if !is_json {
        return Err(ApiError::UnsupportedMediaType);
    }
    serde_json::from_slice(body).map_err(|e| ApiError::invalid("", format!("invalid JSON: {e}")))
}

fn decode<T: DeserializeOwned>(value: Value) -> ApiResult<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ApiError::invalid(path, e.inner().to_string())
    })
}

fn wait_param(state: &AppState, query: &HashMap<String, String>, default: Duration) -> ApiResult<Duration> {
    let Some(raw) = query.get("wait_ms") else { return Ok(default) };
    let ms: u64 = raw.parse().map_err(|_| ApiError::BadRequest(format!("wait_ms `{raw}` is not a non-negative integer")))?;
    let wait = Duration::from_millis(ms);
    if wait > state.max_wait {
        return Err(ApiError::BadRequest(format!("wait_ms exceeds the maximum of {}", state.max_wait.as_millis())));
    }
    Ok(wait)
}

fn kind_param(query: &HashMap<String, String>) -> ApiResult<Option<ProposalKind>> {
    query
        .get("kind")
        .map(|k| k.parse().map_err(|_| ApiError::BadRequest(format!("unknown kind `{k}`"))))
        .transpose()
}

fn with_revision(status: StatusCode, revision: u64) -> Response {
    let mut res = status.into_response();
    res.headers_mut().insert(REVISION_HEADER, HeaderValue::from(revision));
    res
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub review_url: String,
    pub revision: u64,
    pub state: SessionState,
}

pub async fn submit_proposal(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let raw = json_body(&headers, &body)?;
    let proposal = validate_proposal(&raw)?;
    let session = blocking({
        let engine = state.engine.clone();
        move || engine.create_session(proposal, ids::now_ms(), None)
    })
    .await??;
    tracing::info!(session = %session.session_id, kind = %session.kind, "proposal submitted");
    let created = Created {
        review_url: state.review_url(&session.session_id),
        session_id: session.session_id,
        revision: session.revision,
        state: session.state,
    };
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

pub async fn poll_outcome(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult {
    let wait = wait_param(&state, &query, state.max_wait)?;
    Ok(match state.engine.await_outcome(&id, wait).await? {
        PollResult::Outcome { outcome } => (StatusCode::OK, Json(outcome)).into_response(),
        PollResult::RevisionRequested { reasons, revision } => {
            (StatusCode::ACCEPTED, Json(json!({ "reasons": reasons, "revision": revision }))).into_response()
        }
        PollResult::Timeout { revision } => with_revision(StatusCode::NO_CONTENT, revision),
    })
}

pub async fn update_artifact(State(state): State<AppState>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let raw = json_body(&headers, &body)?;
    let Value::Object(mut obj) = raw else {
        return Err(ApiError::invalid("", "expected an object with `artifact` and `base_revision`"));
    };
    if let Some(unknown) = obj.keys().find(|k| !matches!(k.as_str(), "artifact" | "base_revision")) {
        return Err(ApiError::invalid(unknown.clone(), "unknown field"));
    }
    let base_revision: u64 = match obj.remove("base_revision") {
        Some(v) => decode(v).map_err(|_| ApiError::invalid("base_revision", "expected a non-negative integer"))?,
        None => return Err(ApiError::invalid("base_revision", "missing field")),
    };
    let Some(artifact) = obj.remove("artifact") else {
        return Err(ApiError::invalid("artifact", "missing field"));
    };
    let session_kind = state.engine.get(&id)?.kind;
    if let Some(tag) = artifact.get("kind").and_then(Value::as_str) {
        let got: ProposalKind = tag.parse().map_err(|_| ApiError::invalid("artifact.kind", format!("unknown kind `{tag}`")))?;
        if got != session_kind {
            return Err(crate::session::SessionError::KindMismatch { expected: session_kind, got }.into());
        }
    }
    let artifact = decode_artifact(session_kind, &artifact).map_err(|e| {
        ApiError::Unprocessable(
            e.errors
                .into_iter()
                .map(|v| crate::model::ValidationError::new(v.path.replacen("payload", "artifact", 1), v.message))
                .collect(),
        )
    })?;
    let session = blocking({
        let engine = state.engine.clone();
        move || engine.agent_update_artifact(&id, artifact, base_revision, ids::now_ms())
    })
    .await??;
    Ok(Json(json!({ "session_id": session.session_id, "revision": session.revision })).into_response())
}

pub async fn list_sessions(State(state): State<AppState>, Query(query): Query<HashMap<String, String>>) -> ApiResult {
    let kind = kind_param(&query)?;
    Ok(Json(state.engine.list(kind)).into_response())
}

pub async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let session = state.engine.get(&id)?;
    let session = if session.state == SessionState::Pending {
        let engine = state.engine.clone();
        let sid = id.clone();
        match blocking(move || engine.open_session(&sid, ids::now_ms())).await? {
            Ok(s) => s,
            Err(crate::session::SessionError::Terminal(_)) => state.engine.get(&id)?,
            Err(e) => return Err(e.into()),
        }
    } else {
        session
    };
    Ok(Json(session).into_response())
}

pub async fn post_action(State(state): State<AppState>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let action: ReviewAction = decode(json_body(&headers, &body)?)?;
    let (sequence_number, session) = blocking({
        let engine = state.engine.clone();
        move || engine.submit_action(&id, action, ids::now_ms())
    })
    .await??;
    Ok(Json(json!({ "sequence_number": sequence_number, "revision": session.revision })).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResolveBody {
    decision: Decision,
    #[serde(default)]
    persist_preferences: bool,
}

pub async fn resolve(State(state): State<AppState>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let req: ResolveBody = decode(json_body(&headers, &body)?)?;
    let engine = state.engine.clone();
    let memory = state.memory.clone();
    let outcome = blocking(move || -> ApiResult<_> {
        let now = ids::now_ms();
        let outcome = engine.resolve_session(&id, req.decision, now)?;
        let session = engine.get(&id)?;
        let _guard = memory.lock.lock().unwrap_or_else(|e| e.into_inner());
        if req.persist_preferences {
            let recorded = memory.file.record_all(memory::preference_drafts(&session), now)?;
            tracing::info!(session = %id, entries = recorded.len(), "preferences recorded");
        }
        if session.kind == ProposalKind::Memory && outcome.decision == Decision::Approved {
            memory.file.commit_compaction(&outcome, now)?;
        }
        Ok(outcome)
    })
    .await??;
    Ok(Json(outcome).into_response())
}

pub async fn events(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult {
    let after: u64 = match query.get("after_seq") {
        Some(raw) => raw.parse().map_err(|_| ApiError::BadRequest(format!("after_seq `{raw}` is not a non-negative integer")))?,
        None => 0,
    };
    let wait = wait_param(&state, &query, Duration::ZERO)?;
    let events = state.engine.wait_events(&id, after, wait).await?;
    if events.is_empty() {
        return Ok(StatusCode::NO_CONTENT.into_response());
    }
    Ok(Json(events).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MemoryView {
    pub entries: Vec<MemoryEntry>,
    pub summaries: Vec<Summary>,
}

pub async fn read_memory(State(state): State<AppState>, Query(query): Query<HashMap<String, String>>) -> ApiResult {
    let kind = kind_param(&query)?;
    let loaded = match query.get("loaded").map(String::as_str) {
        None => None,
        Some("true") => Some(true),
        Some("false") => Some(false),
        Some(other) => return Err(ApiError::BadRequest(format!("loaded `{other}` must be true or false"))),
    };
    let file = state.memory.file.clone();
    let store = blocking(move || file.load()).await??;
    let entries = store
        .entries()
        .filter(|e| kind.is_none_or(|k| e.kind == k) && loaded.is_none_or(|l| e.loaded == l))
        .cloned()
        .collect();
    let summaries = store.summaries().cloned().collect();
    Ok(Json(MemoryView { entries, summaries }).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum MemoryAction {
    Record {
        kind: ProposalKind,
        reason: String,
        #[serde(default)]
        before: Option<String>,
        #[serde(default)]
        after: Option<String>,
    },
    SetLoaded {
        entry_id: String,
        loaded: bool,
    },
    BeginCompaction {
        summary_draft: String,
        #[serde(default)]
        entry_ids: Vec<String>,
        #[serde(default)]
        agent_session_id: Option<String>,
    },
    CommitCompaction {
        session_id: String,
    },
}

pub async fn memory_action(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let action: MemoryAction = decode(json_body(&headers, &body)?)?;
    let memory = state.memory.clone();
    let engine = state.engine.clone();
    let review_url = state.clone();
    blocking(move || -> ApiResult {
        let now: Millis = ids::now_ms();
        let _guard = memory.lock.lock().unwrap_or_else(|e| e.into_inner());
        let file: &MemoryFile = &memory.file;
        Ok(match action {
            MemoryAction::Record { kind, reason, before, after } => {
                let entry_id = file.record_entry(EntryDraft { kind, reason, before, after }, now)?;
                (StatusCode::CREATED, Json(json!({ "entry_id": entry_id }))).into_response()
            }
            MemoryAction::SetLoaded { entry_id, loaded } => {
                file.set_loaded(&entry_id, loaded)?;
                Json(json!({ "entry_id": entry_id, "loaded": loaded })).into_response()
            }
            MemoryAction::BeginCompaction { summary_draft, entry_ids, agent_session_id } => {
                let store = file.load()?;
                let touched = entry_ids
                    .iter()
                    .map(|id| store.entry(id).cloned().ok_or_else(|| memory::MemoryError::UnknownEntry(id.clone())))
                    .collect::<Result<Vec<_>, _>>()?;
                let agent = agent_session_id.unwrap_or_else(|| "reviewer".to_string());
                let proposal = memory::begin_compaction(&summary_draft, touched, &agent)?;
                let session = engine.create_session(proposal, now, None)?;
                let created = Created {
                    review_url: review_url.review_url(&session.session_id),
                    session_id: session.session_id,
                    revision: session.revision,
                    state: session.state,
                };
                (StatusCode::CREATED, Json(created)).into_response()
            }
            MemoryAction::CommitCompaction { session_id } => {
                let session = engine.get(&session_id)?;
                let outcome = session
                    .outcome
                    .ok_or_else(|| ApiError::invalid("session_id", format!("session is {}, not resolved", session.state)))?;
                let committed = file.commit_compaction(&outcome, now)?;
                Json(json!({ "committed": committed })).into_response()
            }
        })
    })
    .await?
}

pub async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}
