//! JSON over HTTP, events as server-sent events.
//!
//! ```text
//! POST /sessions                 {user_id}              -> {session_id}
//! GET  /sessions                                        -> [SessionState]
//! POST /sessions/{id}/samples    {location, samples}    -> {events}
//! GET  /sessions/{id}/status                            -> SessionState
//! GET  /sessions/{id}/events?from=N                     -> SSE, one WarningEvent per message
//! POST /sessions/{id}/actions    {action}               -> SessionState
//! ```

use std::convert::Infallible;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use jawprint_core::signal::{SensorLocation, SensorSample};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::error::RecvError;

use crate::manager::SessionManager;
use crate::session::{Action, EventKind, SessionState, WarningEvent};
use crate::{ServiceConfig, ServiceError};

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateSession {
    pub user_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SampleBatch {
    pub location: String,
    pub samples: Vec<SensorSample>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestResult {
    pub events: Vec<WarningEvent>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ActionRequest {
    pub action: Action,
}

#[derive(Debug, Deserialize)]
pub struct EventsQuery {
    #[serde(default)]
    pub from: u64,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownUser(_) | ServiceError::SessionNotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionNotActive(_) | ServiceError::InvalidTransition { .. } => StatusCode::CONFLICT,
            ServiceError::UnknownLocation(_) | ServiceError::InvalidSamples(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

pub fn router(manager: Arc<SessionManager>) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}/samples", post(ingest))
        .route("/sessions/{id}/status", get(status))
        .route("/sessions/{id}/events", get(events))
        .route("/sessions/{id}/actions", post(act))
        .with_state(manager)
}

async fn create_session(
    State(m): State<Arc<SessionManager>>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionCreated>), ServiceError> {
    let session_id = m.create_session(&req.user_id)?;
    tracing::info!(%session_id, user_id = %req.user_id, "session created");
    Ok((StatusCode::CREATED, Json(SessionCreated { session_id })))
}

async fn list_sessions(State(m): State<Arc<SessionManager>>) -> Json<Vec<SessionState>> {
    Json(m.list())
}

async fn ingest(
    State(m): State<Arc<SessionManager>>,
    Path(id): Path<String>,
    Json(batch): Json<SampleBatch>,
) -> Result<Json<IngestResult>, ServiceError> {
    let location: SensorLocation = batch.location.parse().map_err(|_| ServiceError::UnknownLocation(batch.location.clone()))?;
    let now = unix_now();
    let events = tokio::task::spawn_blocking(move || m.ingest(&id, location, &batch.samples, now))
        .await
        .map_err(|e| ServiceError::Scoring(e.to_string()))??;
    for e in events.iter().filter(|e| !matches!(e.kind, EventKind::WindowPassed | EventKind::WindowFailure)) {
        tracing::warn!(session_id = %e.session_id, window = e.window_index, kind = ?e.kind, "session event");
    }
    Ok(Json(IngestResult { events }))
}

async fn status(State(m): State<Arc<SessionManager>>, Path(id): Path<String>) -> Result<Json<SessionState>, ServiceError> {
    Ok(Json(m.status(&id)?))
}

async fn act(
    State(m): State<Arc<SessionManager>>,
    Path(id): Path<String>,
    Json(req): Json<ActionRequest>,
) -> Result<Json<SessionState>, ServiceError> {
    let state = m.act(&id, req.action, unix_now())?;
    tracing::info!(session_id = %id, action = ?req.action, status = ?state.status, "operator action");
    Ok(Json(state))
}

fn to_sse(e: &WarningEvent) -> Result<Event, Infallible> {
    let data = serde_json::to_string(e).expect("events always serialize");
    Ok(Event::default().id(e.seq.to_string()).data(data))
}

/// Replays the log from `from`, then follows live events. A subscriber
/// that falls behind the buffer is disconnected instead of stalling ingestion.
async fn events(
    State(m): State<Arc<SessionManager>>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ServiceError> {
    let sub = m.subscribe(&id, q.from)?;
    let backlog = stream::iter(sub.backlog.into_iter().map(|e| to_sse(&e)));
    let live = stream::unfold(sub.live, |mut rx| async move {
        match rx.recv().await {
            Ok(e) => Some((to_sse(&e), rx)),
            Err(RecvError::Closed | RecvError::Lagged(_)) => None,
        }
    });
    Ok(Sse::new(backlog.chain(live)).keep_alive(KeepAlive::default()))
}

pub async fn serve(cfg: &ServiceConfig, manager: Arc<SessionManager>) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", cfg.port)).await?;
    tracing::info!(port = cfg.port, "listening");
    axum::serve(listener, router(manager)).await?;
    Ok(())
}
