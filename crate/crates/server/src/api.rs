use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nexthint_core::catalog::{check_solution, Catalog, RunnerConfig, TestOutcome};
use nexthint_core::llm::{LlmClient, LlmError};
use nexthint_core::prompt::{default_spec, render_prompt};
use nexthint_core::session::{is_valid_alias, EventPayload, Hint, HintRating, LedgerError, Session, SnapshotTrigger};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::store::{EventStore, StoreError};

/// Seconds a client should wait after an upstream failure.
const RETRY_AFTER_SECS: u64 = 5;

#[derive(Clone)]
pub struct AppState {
    pub catalog: Arc<Catalog>,
    pub llm: LlmClient,
    pub runner: Arc<RunnerConfig>,
    pub store: Arc<EventStore>,
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Validation(String),
    #[error("hint generation failed: {detail}")]
    Upstream { detail: String, transient: bool },
    #[error("{0}")]
    Internal(String),
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Ledger(l) => match l {
                LedgerError::UnknownSession(_) | LedgerError::UnknownHint(_) => ApiError::NotFound(l.to_string()),
                LedgerError::AlreadyRated(_) | LedgerError::DuplicateHint(_) | LedgerError::DuplicateSession(_) => {
                    ApiError::Conflict(l.to_string())
                }
                LedgerError::InvalidRating(_) => ApiError::Validation(l.to_string()),
                other => ApiError::Internal(other.to_string()),
            },
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::Validation(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self {
            ApiError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ApiError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            ApiError::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
            ApiError::Upstream { .. } => (StatusCode::BAD_GATEWAY, "upstream"),
            ApiError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status.is_server_error() {
            tracing::error!(%self, "request failed");
        }
        let mut resp = (status, Json(json!({"error": kind, "detail": self.to_string()}))).into_response();
        if let ApiError::Upstream { transient: true, .. } = self {
            resp.headers_mut()
                .insert(header::RETRY_AFTER, HeaderValue::from(RETRY_AFTER_SECS));
        }
        resp
    }
}

/// Exercise as shown to students: no model solution, no test cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExerciseView {
    pub id: String,
    pub title: String,
    pub description: String,
    pub starter_code: String,
}

/// Hint as returned to the front end. The prompt stays in the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintView {
    pub hint_id: String,
    pub session_id: String,
    pub text: String,
    pub model_id: String,
    pub created_at: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckView {
    pub passed: bool,
    pub tests_passed: usize,
    pub tests_total: usize,
    pub per_test: Vec<TestOutcome>,
}

#[derive(Deserialize)]
struct NewSession {
    exercise_id: String,
    #[serde(default)]
    participant_alias: Option<String>,
}

#[derive(Deserialize)]
struct SourceBody {
    source: String,
}

#[derive(Deserialize)]
struct RatingBody {
    clear: u8,
    fits: u8,
    helpful: u8,
    #[serde(default)]
    comment: Option<String>,
}

#[derive(Deserialize)]
struct ExportQuery {
    session: Option<String>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/exercises", get(list_exercises))
        .route("/api/sessions", post(start_session))
        .route("/api/sessions/{id}/hints", post(request_hint))
        .route("/api/sessions/{id}/check", post(check))
        .route("/api/hints/{id}/rating", post(rate_hint))
        .route("/api/export", get(export))
        .with_state(state)
}

async fn list_exercises(State(state): State<AppState>) -> Json<Vec<ExerciseView>> {
    Json(
        state
            .catalog
            .exercises()
            .iter()
            .map(|e| ExerciseView {
                id: e.id.clone(),
                title: e.title.clone(),
                description: e.description.clone(),
                starter_code: e.starter_code.clone(),
            })
            .collect(),
    )
}

fn random_alias() -> String {
    rand::rng().random_range(10_000_000u32..100_000_000).to_string()
}

async fn start_session(
    State(state): State<AppState>,
    body: Result<Json<NewSession>, JsonRejection>,
) -> Result<(StatusCode, Json<Session>), ApiError> {
    let Json(body) = body?;
    if state.catalog.get(&body.exercise_id).is_none() {
        return Err(ApiError::NotFound(format!("unknown exercise `{}`", body.exercise_id)));
    }
    let alias = match body.participant_alias.filter(|a| !a.trim().is_empty()) {
        Some(a) if is_valid_alias(a.trim()) => a.trim().to_string(),
        Some(_) => {
            return Err(ApiError::Validation(
                "participant_alias must be 1 to 16 digits".into(),
            ))
        }
        None => random_alias(),
    };
    let session_id = uuid::Uuid::new_v4().to_string();
    let event = state.store.append(&session_id, |at| {
        EventPayload::SessionStarted(Session {
            session_id: session_id.clone(),
            participant_alias: alias,
            exercise_id: body.exercise_id,
            started_at: at,
        })
    })?;
    let EventPayload::SessionStarted(session) = event.payload else {
        unreachable!("appended a session_started event");
    };
    Ok((StatusCode::CREATED, Json(session)))
}

fn session_exercise(state: &AppState, session_id: &str) -> Result<String, ApiError> {
    state
        .store
        .read(|l| l.session(session_id).map(|r| r.session.exercise_id.clone()))
        .ok_or_else(|| ApiError::NotFound(format!("unknown session `{session_id}`")))
}

async fn request_hint(
    State(state): State<AppState>,
    Path(session_id): Path<String>,
    body: Result<Json<SourceBody>, JsonRejection>,
) -> Result<(StatusCode, Json<HintView>), ApiError> {
    let Json(SourceBody { source }) = body?;
    let exercise_id = session_exercise(&state, &session_id)?;
    let exercise = state
        .catalog
        .get(&exercise_id)
        .ok_or_else(|| ApiError::Internal(format!("session exercise `{exercise_id}` is not in the catalog")))?;
    state.store.append(&session_id, |_| EventPayload::SnapshotLogged {
        source: source.clone(),
        trigger: SnapshotTrigger::Hint,
    })?;
    let prompt = render_prompt(&default_spec(), exercise, &source).map_err(|e| ApiError::Internal(e.to_string()))?;
    let request = state.llm.request(prompt.text.clone(), prompt.spec.temperature);
    let response = state.llm.complete(&request).await.map_err(|e| match e {
        LlmError::InvalidRequest(d) => ApiError::Internal(d),
        other => ApiError::Upstream {
            transient: other.is_transient(),
            detail: other.to_string(),
        },
    })?;
    let hint_id = uuid::Uuid::new_v4().to_string();
    let latency_ms = response.latency_ms;
    let event = state.store.append(&session_id, |at| EventPayload::HintIssued {
        hint: Hint {
            hint_id,
            session_id: session_id.clone(),
            code_snapshot: source,
            prompt,
            text: response.text,
            model_id: response.model_id,
            created_at: at,
        },
        latency_ms,
    })?;
    let EventPayload::HintIssued { hint, .. } = event.payload else {
        unreachable!("appended a hint_issued event");
    };
    Ok((
        StatusCode::CREATED,
        Json(HintView {
            hint_id: hint.hint_id,
            session_id: hint.session_id,
            text: hint.text,
            model_id: hint.model_id,
            created_at: hint.created_at,
        }),
    ))
}

async fn rate_hint(
    State(state): State<AppState>,
    Path(hint_id): Path<String>,
    body: Result<Json<RatingBody>, JsonRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let Json(body) = body?;
    let rating = HintRating {
        hint_id: hint_id.clone(),
        clear: body.clear,
        fits: body.fits,
        helpful: body.helpful,
        comment: body.comment.filter(|c| !c.trim().is_empty()),
    };
    rating
        .validate()
        .map_err(|name| ApiError::Validation(format!("`{name}` must be between 1 and 5")))?;
    let session_id = state
        .store
        .read(|l| l.hint(&hint_id).map(|h| h.hint.session_id.clone()))
        .ok_or_else(|| ApiError::NotFound(format!("unknown hint `{hint_id}`")))?;
    state.store.append(&session_id, |_| EventPayload::HintRated(rating))?;
    Ok(Json(json!({"hint_id": hint_id, "status": "recorded"})))
}

async fn check(
    State(state): State<AppState>,
    Path(session_id): Path<String>,
    body: Result<Json<SourceBody>, JsonRejection>,
) -> Result<Json<CheckView>, ApiError> {
    let Json(SourceBody { source }) = body?;
    let exercise_id = session_exercise(&state, &session_id)?;
    let exercise = state
        .catalog
        .get(&exercise_id)
        .cloned()
        .ok_or_else(|| ApiError::Internal(format!("session exercise `{exercise_id}` is not in the catalog")))?;
    state.store.append(&session_id, |_| EventPayload::SnapshotLogged {
        source: source.clone(),
        trigger: SnapshotTrigger::Check,
    })?;
    let runner = state.runner.clone();
    let checked_source = source.clone();
    let result = tokio::task::spawn_blocking(move || check_solution(&exercise, &checked_source, &runner))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    let view = CheckView {
        passed: result.passed,
        tests_passed: result.per_test.iter().filter(|t| t.passed).count(),
        tests_total: result.per_test.len(),
        per_test: result.per_test,
    };
    state.store.append(&session_id, |_| EventPayload::SolutionChecked {
        source,
        passed: view.passed,
        tests_passed: view.tests_passed,
        tests_total: view.tests_total,
        failed_tests: view.per_test.iter().filter(|t| !t.passed).map(|t| t.name.clone()).collect(),
    })?;
    Ok(Json(view))
}

async fn export(State(state): State<AppState>, Query(q): Query<ExportQuery>) -> Result<Response, ApiError> {
    let session = q.session.as_deref().filter(|s| *s != "all");
    let body = state.store.export(session)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}
