//! HTTP endpoints. All bodies are JSON; `/events` is a server-sent event
//! stream of snapshots.

use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use irl_core::gridworld::{ScenarioDocument, BUILTIN_NAMES};
use irl_core::{AdviceConfig, AdviceKind, Dictionary, Hyperparams, Scenario, DEFAULT_STEP_CAP};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::session::{Command, SessionConfig, SessionError, SessionId, SessionManager, DEFAULT_STEP_INTERVAL_MS};

pub const DEFAULT_PORT: u16 = 8080;
/// Environment variable overriding the listen port.
pub const PORT_ENV: &str = "IRL_PORT";

pub type AppState = Arc<SessionManager>;

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let status = match &self {
            SessionError::UnknownSession(_) => StatusCode::NOT_FOUND,
            SessionError::AlreadyActive(_) | SessionError::NotRunning(_) | SessionError::InvalidTransition { .. } => {
                StatusCode::CONFLICT
            }
            SessionError::EmptyPhrase | SessionError::Core(_) => StatusCode::BAD_REQUEST,
            SessionError::LoopGone => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

pub fn router(dictionary: Arc<Dictionary>) -> Router {
    router_with(Arc::new(SessionManager::new(dictionary)))
}

pub fn router_with(state: AppState) -> Router {
    Router::new()
        .route("/api/config", get(config))
        .route("/api/dictionary", get(dictionary))
        .route("/api/scenarios/{name}", get(scenario))
        .route("/api/sessions", post(start))
        .route("/api/sessions/{id}/state", get(session_state))
        .route("/api/sessions/{id}/events", get(events))
        .route("/api/sessions/{id}/advice", post(post_advice).get(advice_log))
        .route("/api/sessions/{id}/trace", get(trace))
        .route("/api/sessions/{id}/pause", post(|s, p| control(s, p, Command::Pause)))
        .route("/api/sessions/{id}/resume", post(|s, p| control(s, p, Command::Resume)))
        .route("/api/sessions/{id}/reset", post(|s, p| control(s, p, Command::Reset)))
        .route("/api/sessions/{id}/stop", post(|s, p| control(s, p, Command::Stop)))
        .with_state(state)
}

#[derive(Serialize)]
struct ConfigView {
    scenarios: &'static [&'static str],
    hp: Hyperparams,
    advice: AdviceConfig,
    step_interval_ms: u64,
    step_cap: usize,
    active_session: Option<SessionId>,
}

async fn config(State(mgr): State<AppState>) -> Json<ConfigView> {
    Json(ConfigView {
        scenarios: &BUILTIN_NAMES,
        hp: Hyperparams::default(),
        advice: AdviceConfig::NONE,
        step_interval_ms: DEFAULT_STEP_INTERVAL_MS,
        step_cap: DEFAULT_STEP_CAP,
        active_session: mgr.active(),
    })
}

async fn dictionary(State(mgr): State<AppState>) -> Json<Dictionary> {
    Json(mgr.dictionary().as_ref().clone())
}

async fn scenario(Path(name): Path<String>) -> Result<Json<ScenarioDocument>, SessionError> {
    Ok(Json(Scenario::builtin(&name)?.to_document()))
}

async fn start(
    State(mgr): State<AppState>,
    body: Option<Json<SessionConfig>>,
) -> Result<(StatusCode, Json<serde_json::Value>), SessionError> {
    let cfg = body.map(|Json(c)| c).unwrap_or_default();
    let id = mgr.start(cfg)?;
    let state = mgr.state(id)?;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id, "state": state }))))
}

async fn session_state(State(mgr): State<AppState>, Path(id): Path<SessionId>) -> Response {
    match mgr.state(id) {
        Ok(s) => Json(s).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn events(
    State(mgr): State<AppState>,
    Path(id): Path<SessionId>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, SessionError> {
    let rx = mgr.subscribe(id)?;
    let stream = stream::unfold((rx, true), |(mut rx, first)| async move {
        if !first && rx.changed().await.is_err() {
            return None;
        }
        let snapshot = rx.borrow_and_update().clone();
        let event = Event::default().event("state").json_data(&snapshot).unwrap_or_default();
        Some((Ok(event), (rx, false)))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AdviceBody {
    kind: AdviceKind,
    phrase: String,
}

async fn post_advice(State(mgr): State<AppState>, Path(id): Path<SessionId>, Json(body): Json<AdviceBody>) -> Response {
    match mgr.post_advice(id, body.kind, &body.phrase) {
        Ok(ack) => Json(ack).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn advice_log(State(mgr): State<AppState>, Path(id): Path<SessionId>) -> Response {
    match mgr.advice_log(id) {
        Ok(log) => Json(log).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn trace(State(mgr): State<AppState>, Path(id): Path<SessionId>) -> Response {
    match mgr.episode_trace(id) {
        Ok(t) => Json(t).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn control(State(mgr): State<AppState>, Path(id): Path<SessionId>, command: Command) -> Response {
    match mgr.control(id, command).await {
        Ok(status) => Json(json!({ "status": status })).into_response(),
        Err(e) => e.into_response(),
    }
}

/// Port from `explicit`, else `IRL_PORT`, else the default.
pub fn resolve_port(explicit: Option<u16>) -> u16 {
    explicit.or_else(|| std::env::var(PORT_ENV).ok().and_then(|v| v.parse().ok())).unwrap_or(DEFAULT_PORT)
}

pub async fn serve(listener: tokio::net::TcpListener, dictionary: Arc<Dictionary>) -> std::io::Result<()> {
    axum::serve(listener, router(dictionary)).await
}
