//! HTTP routes over [`MissionStore`].

use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ctxnav_core::map::{parse_map, MapError};
use serde::{Deserialize, Serialize};

use crate::mission::{MissionError, MissionEvent, MissionState};
use crate::store::{InterpreterChoice, MissionStore};

/// Error body for every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub code: String,
    pub message: String,
}

pub struct ApiError(pub MissionError);

impl From<MissionError> for ApiError {
    fn from(e: MissionError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            MissionError::MissionNotFound(_) => StatusCode::NOT_FOUND,
            MissionError::AlreadyLanded | MissionError::MissionAborted | MissionError::NoPath(_) => StatusCode::CONFLICT,
            MissionError::InvalidMap(_) | MissionError::InterpretationFailed(_) => StatusCode::UNPROCESSABLE_ENTITY,
            MissionError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            MissionError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!("{}", self.0);
        }
        let body = ErrorEnvelope {
            code: self.0.code().to_string(),
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreatedMission {
    pub mission_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContextRequest {
    pub utterance: String,
    #[serde(default)]
    pub interpreter: InterpreterChoice,
    /// Provider id for `llm` mode; the first configured one when omitted.
    #[serde(default)]
    pub provider: Option<String>,
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    #[serde(default)]
    since: u64,
    /// Long-poll: wait up to this many milliseconds for a new event.
    #[serde(default)]
    wait_ms: Option<u64>,
}

pub fn router(store: Arc<MissionStore>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/missions", post(create_mission))
        .route("/missions/{id}", get(get_mission))
        .route("/missions/{id}/step", post(step_mission))
        .route("/missions/{id}/context", post(apply_context))
        .route("/missions/{id}/events", get(list_events))
        .with_state(store)
}

async fn create_mission(State(store): State<Arc<MissionStore>>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let text = std::str::from_utf8(&body).map_err(|e| MissionError::InvalidRequest(e.to_string()))?;
    let map = parse_map(text).map_err(|e| match e {
        MapError::MalformedDocument(d) | MapError::InvalidBounds(d) => MissionError::InvalidMap(d),
    })?;
    let mission_id = store.create(map)?;
    Ok((StatusCode::CREATED, Json(CreatedMission { mission_id })))
}

async fn get_mission(State(store): State<Arc<MissionStore>>, Path(id): Path<String>) -> Result<Json<MissionState>, ApiError> {
    Ok(Json((*store.get(&id)?).clone()))
}

async fn step_mission(State(store): State<Arc<MissionStore>>, Path(id): Path<String>) -> Result<Json<MissionState>, ApiError> {
    Ok(Json((*store.step(&id).await?).clone()))
}

async fn apply_context(
    State(store): State<Arc<MissionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<MissionState>, ApiError> {
    let req: ContextRequest =
        serde_json::from_slice(&body).map_err(|e| MissionError::InvalidRequest(format!("context body: {e}")))?;
    let state = store
        .apply_context(&id, &req.utterance, req.interpreter, req.provider.as_deref())
        .await?;
    Ok(Json((*state).clone()))
}

async fn list_events(
    State(store): State<Arc<MissionStore>>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
) -> Result<Json<Vec<MissionEvent>>, ApiError> {
    let wait = q.wait_ms.map(Duration::from_millis);
    Ok(Json(store.events(&id, q.since, wait).await?))
}
