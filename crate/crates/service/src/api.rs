use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use futures::{Stream, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use taxiguard_core::calibration::CalibrationSet;
use taxiguard_core::conflict::OffsetSpec;
use taxiguard_core::TaxiCommand;
use tokio::sync::{broadcast, Mutex, RwLock};
use tokio_stream::wrappers::errors::BroadcastStreamRecvError;
use tokio_stream::wrappers::BroadcastStream;

use crate::state::{Evaluation, PairSweep, Scenario, ScenarioError};

#[derive(Debug, Clone, Serialize)]
pub struct Event {
    pub seq: u64,
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub payload: Value,
}

pub struct AppState {
    scenario: RwLock<Arc<Scenario>>,
    /// Serializes mutations; holds the next event sequence number.
    writer: Mutex<u64>,
    events: broadcast::Sender<Event>,
    snapshot_path: Option<PathBuf>,
    token: Option<String>,
    keepalive: Duration,
}

impl AppState {
    pub fn new(
        scenario: Scenario,
        snapshot_path: Option<PathBuf>,
        token: Option<String>,
        keepalive: Duration,
        event_buffer: usize,
    ) -> Arc<Self> {
        let (events, _) = broadcast::channel(event_buffer.max(1));
        Arc::new(Self {
            scenario: RwLock::new(Arc::new(scenario)),
            writer: Mutex::new(0),
            events,
            snapshot_path,
            token,
            keepalive,
        })
    }

    pub async fn current(&self) -> Arc<Scenario> {
        self.scenario.read().await.clone()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Event> {
        self.events.subscribe()
    }

    /// Run `f` on a copy of the state under the writer lock; on success
    /// persist, publish and emit the returned events in order.
    async fn mutate<T>(
        &self,
        f: impl FnOnce(&mut Scenario) -> Result<(T, Vec<(&'static str, Value)>), ScenarioError>,
    ) -> Result<T, ApiError> {
        let mut seq = self.writer.lock().await;
        let mut next = (*self.current().await).clone();
        let (out, events) = f(&mut next)?;
        if let Some(path) = &self.snapshot_path {
            persist(path, &next).await.map_err(ApiError::Persist)?;
        }
        *self.scenario.write().await = Arc::new(next);
        for (kind, payload) in events {
            *seq += 1;
            // No subscribers is fine.
            let _ = self.events.send(Event { seq: *seq, kind, payload });
        }
        Ok(out)
    }
}

async fn persist(path: &std::path::Path, s: &Scenario) -> std::io::Result<()> {
    let bytes = serde_json::to_vec_pretty(&s.snapshot()).map_err(std::io::Error::other)?;
    let tmp = path.with_extension("tmp");
    tokio::fs::write(&tmp, bytes).await?;
    tokio::fs::rename(&tmp, path).await
}

#[derive(Debug)]
pub enum ApiError {
    Scenario(ScenarioError),
    Body(JsonRejection),
    BadRequest(String),
    Unauthorized,
    Persist(std::io::Error),
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        ApiError::Scenario(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::Body(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::Scenario(e) => {
                let msg = e.to_string();
                match e {
                    ScenarioError::InvalidCommand(v) => (
                        StatusCode::UNPROCESSABLE_ENTITY,
                        json!({"error": "invalid-command", "message": msg, "violations": v}),
                    ),
                    ScenarioError::Deduction(_) => {
                        (StatusCode::UNPROCESSABLE_ENTITY, json!({"error": "deduction", "message": msg}))
                    }
                    ScenarioError::InvalidCalibration(v) => (
                        StatusCode::UNPROCESSABLE_ENTITY,
                        json!({"error": "invalid-calibration", "message": msg, "issues": v}),
                    ),
                    ScenarioError::Duplicate(_) => (StatusCode::CONFLICT, json!({"error": "duplicate", "message": msg})),
                    ScenarioError::NoCalibration => {
                        (StatusCode::CONFLICT, json!({"error": "no-calibration", "message": msg}))
                    }
                    ScenarioError::NotFound(_) => (StatusCode::NOT_FOUND, json!({"error": "not-found", "message": msg})),
                }
            }
            ApiError::Body(r) => {
                let status = match r.status() {
                    StatusCode::BAD_REQUEST => StatusCode::UNPROCESSABLE_ENTITY,
                    s => s,
                };
                (status, json!({"error": "malformed-body", "message": r.body_text()}))
            }
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({"error": "bad-request", "message": m})),
            ApiError::Unauthorized => (StatusCode::UNAUTHORIZED, json!({"error": "unauthorized"})),
            ApiError::Persist(e) => {
                tracing::error!("snapshot write failed: {e}");
                (StatusCode::INTERNAL_SERVER_ERROR, json!({"error": "persist", "message": e.to_string()}))
            }
        };
        (status, Json(body)).into_response()
    }
}

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    let mutating = Router::new()
        .route("/api/commands", post(register))
        .route("/api/commands/{id}", delete(complete))
        .route("/api/calibration", post(import_calibration))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/api/state", get(get_state))
        .route("/api/map", get(get_map))
        .route("/api/calibration", get(get_calibration))
        .route("/api/whatif", post(what_if))
        .route("/api/events", get(events))
        .merge(mutating)
        .with_state(state)
}

async fn require_token(State(app): Shared, headers: HeaderMap, req: Request, next: Next) -> Response {
    if let Some(token) = &app.token {
        let given = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(token.as_str()) {
            return ApiError::Unauthorized.into_response();
        }
    }
    next.run(req).await
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn conflict_payload(e: &Evaluation) -> Value {
    json!({
        "command_id": e.command_id,
        "conflicts": e.conflicts,
        "highest_level": e.highest_level,
        "action": e.action,
    })
}

async fn register(State(app): Shared, body: Result<Json<TaxiCommand>, JsonRejection>) -> Result<Response, ApiError> {
    let Json(cmd) = body?;
    let eval = app
        .mutate(|s| {
            let eval = s.register(cmd)?;
            let events = vec![
                ("command-added", json!({"command_id": eval.command_id, "timeline": eval.timeline})),
                ("conflict-updated", conflict_payload(&eval)),
            ];
            Ok((eval, events))
        })
        .await?;
    Ok((StatusCode::CREATED, Json(eval)).into_response())
}

async fn complete(State(app): Shared, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let remaining = app
        .mutate(|s| {
            s.remove(&id)?;
            let n = s.commands.len();
            Ok((n, vec![("command-removed", json!({"command_id": id, "remaining": n}))]))
        })
        .await?;
    Ok(Json(json!({"removed": id, "remaining": remaining})))
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SweepSpec {
    Text(String),
    Range(OffsetSpec),
}

#[derive(Debug, Deserialize)]
struct SweepRequest {
    #[serde(default)]
    offsets: Option<SweepSpec>,
    #[serde(default)]
    against: Option<String>,
}

#[derive(Debug, Deserialize)]
struct WhatIfRequest {
    #[serde(flatten)]
    command: TaxiCommand,
    #[serde(default)]
    sweep: Option<SweepRequest>,
}

#[derive(Serialize)]
struct WhatIfResponse {
    #[serde(flatten)]
    evaluation: Evaluation,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<Vec<PairSweep>>,
}

async fn what_if(State(app): Shared, body: Result<Json<WhatIfRequest>, JsonRejection>) -> Result<Json<Value>, ApiError> {
    let Json(req) = body?;
    let s = app.current().await;
    let evaluation = s.evaluate(&req.command)?;
    let sweep = match req.sweep {
        None => None,
        Some(sr) => {
            let spec = match sr.offsets {
                None => OffsetSpec::default(),
                Some(SweepSpec::Range(r)) => {
                    OffsetSpec::new(r.start, r.end, r.step).map_err(|e| ApiError::BadRequest(e.to_string()))?
                }
                Some(SweepSpec::Text(t)) => t.parse().map_err(|e: taxiguard_core::conflict::OffsetSpecError| {
                    ApiError::BadRequest(e.to_string())
                })?,
            };
            Some(s.sweep(&req.command, &spec, sr.against.as_deref())?)
        }
    };
    Ok(Json(to_value(&WhatIfResponse { evaluation, sweep })))
}

async fn get_state(State(app): Shared) -> Json<Value> {
    let s = app.current().await;
    Json(to_value(&s.view()))
}

async fn get_map(State(app): Shared) -> Json<Value> {
    let s = app.current().await;
    Json(to_value(&*s.map))
}

async fn get_calibration(State(app): Shared) -> Result<Response, ApiError> {
    let s = app.current().await;
    match (&s.calibration, &s.calibration_epoch) {
        (Some(c), Some(epoch)) => Ok(([("x-calibration-epoch", epoch.clone())], Json(to_value(&**c))).into_response()),
        _ => Err(ScenarioError::NoCalibration.into()),
    }
}

async fn import_calibration(
    State(app): Shared,
    body: Result<Json<CalibrationSet>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(cal) = body?;
    let view = app
        .mutate(|s| {
            let epoch = s.swap_calibration(cal)?;
            let conflicts: Vec<_> = s.conflicts.values().cloned().collect();
            let events = vec![
                ("calibration-swapped", json!({"epoch": epoch, "commands": s.commands.len()})),
                ("conflict-updated", json!({"conflicts": conflicts})),
            ];
            Ok((json!({"epoch": epoch, "state_hash": s.state_hash()}), events))
        })
        .await?;
    Ok(Json(view))
}

async fn events(State(app): Shared) -> Sse<impl Stream<Item = Result<SseEvent, Infallible>>> {
    let stream = BroadcastStream::new(app.subscribe())
        .map(|item| match item {
            Ok(ev) => (
                true,
                SseEvent::default().event(ev.kind).id(ev.seq.to_string()).data(to_value(&ev).to_string()),
            ),
            Err(BroadcastStreamRecvError::Lagged(n)) => (
                false,
                SseEvent::default().event("dropped").data(json!({"reason": "slow consumer", "missed": n}).to_string()),
            ),
        })
        // Forward the notice, then end the stream for a lagging client.
        .scan(true, |open, (ok, ev)| {
            let out = if *open { Some(ev) } else { None };
            *open = ok;
            futures::future::ready(out)
        })
        .map(Ok);
    Sse::new(stream).keep_alive(KeepAlive::new().interval(app.keepalive))
}
