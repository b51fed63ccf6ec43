//! Session-oriented HTTP interface to compiled monitors, versioned under
//! `/api/v1`.
//!
//! Compiled models are loaded once and shared read-only. Each session sits
//! behind its own lock, so requests on one session are serialized while
//! distinct sessions proceed concurrently. Sessions idle for longer than the
//! configured timeout are dropped.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use axum::body::{Body, Bytes};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use hymon::model::{compile, load_model, Bounds, CompiledModel, ComponentKind, ModelError, RawEvent};
use hymon::monitor::{EventEcho, MonitorSession, VerdictSnapshot};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::Mutex;

pub const TTL_ENV: &str = "MONITOR_SESSION_TTL_SECS";
pub const DEFAULT_TTL: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("cannot list `{path}`: {source}")]
    Dir {
        path: String,
        source: std::io::Error,
    },
    #[error("model `{path}`: {source}")]
    Model { path: String, source: ModelError },
    #[error("{TTL_ENV} must be a whole number of seconds, got `{0}`")]
    Ttl(String),
}

/// Idle timeout from the environment, or the default.
pub fn ttl_from_env() -> Result<Duration, SetupError> {
    match std::env::var(TTL_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(Duration::from_secs)
            .map_err(|_| SetupError::Ttl(v)),
        Err(_) => Ok(DEFAULT_TTL),
    }
}

pub struct LoadedModel {
    pub id: String,
    pub compiled: CompiledModel,
}

/// Compiles one model file; its id is the file stem.
pub fn load_model_file(path: &Path) -> Result<LoadedModel, SetupError> {
    let err = |source| SetupError::Model {
        path: path.display().to_string(),
        source,
    };
    let model = load_model(path).map_err(err)?;
    let compiled = compile(&model, Bounds::default()).map_err(err)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(LoadedModel { id, compiled })
}

/// Compiles every `*.json` file in the directory.
pub fn load_models_dir(dir: &Path) -> Result<Vec<LoadedModel>, SetupError> {
    let entries = std::fs::read_dir(dir).map_err(|source| SetupError::Dir {
        path: dir.display().to_string(),
        source,
    })?;
    let mut paths: Vec<_> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_model_file(p)).collect()
}

struct SessionRecord {
    model_id: String,
    session: MonitorSession,
    created: Instant,
    last_active: Instant,
}

pub struct AppState {
    models: BTreeMap<String, Arc<LoadedModel>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionRecord>>>>,
    ttl: Duration,
}

impl AppState {
    pub fn new(models: impl IntoIterator<Item = LoadedModel>, ttl: Duration) -> Self {
        AppState {
            models: models
                .into_iter()
                .map(|m| (m.id.clone(), Arc::new(m)))
                .collect(),
            sessions: RwLock::new(HashMap::new()),
            ttl,
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session table lock").len()
    }

    /// Drops sessions idle for longer than the timeout.
    pub async fn evict_idle(&self) {
        let records: Vec<(String, Arc<Mutex<SessionRecord>>)> = self
            .sessions
            .read()
            .expect("session table lock")
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let mut expired = Vec::new();
        for (id, rec) in records {
            if self.is_expired(&*rec.lock().await) {
                expired.push(id);
            }
        }
        let mut table = self.sessions.write().expect("session table lock");
        for id in expired {
            table.remove(&id);
        }
    }

    fn is_expired(&self, rec: &SessionRecord) -> bool {
        rec.last_active.elapsed() >= self.ttl
    }

    fn session(&self, id: &str) -> Option<Arc<Mutex<SessionRecord>>> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
    }

    fn remove(&self, id: &str) -> bool {
        self.sessions
            .write()
            .expect("session table lock")
            .remove(id)
            .is_some()
    }
}

fn json<T: Serialize>(status: StatusCode, body: &T) -> Response {
    let bytes = serde_json::to_vec(body).expect("response bodies serialize");
    Response::builder()
        .status(status)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(bytes))
        .expect("static response parts")
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
}

fn error(status: StatusCode, message: impl AsRef<str>) -> Response {
    json(
        status,
        &ErrorBody {
            error: message.as_ref(),
        },
    )
}

fn no_session(id: &str) -> Response {
    error(StatusCode::NOT_FOUND, format!("no session `{id}`"))
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/models", get(list_models))
        .route("/models/{id}/structure", get(model_structure))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/events", post(post_event))
        .route("/sessions/{id}/what-if", post(what_if))
        .route("/sessions/{id}/recommendations", get(recommendations))
        .route("/sessions/{id}/state", get(session_state));
    Router::new().nest("/api/v1", api).with_state(state)
}

#[derive(Serialize)]
struct ModelSummary<'a> {
    id: &'a str,
    name: Option<&'a str>,
    components: Vec<&'a str>,
}

async fn list_models(State(state): State<Arc<AppState>>) -> Response {
    let list: Vec<ModelSummary> = state
        .models
        .values()
        .map(|m| ModelSummary {
            id: &m.id,
            name: m.compiled.model.name.as_deref(),
            components: m.compiled.model.component_ids().collect(),
        })
        .collect();
    json(StatusCode::OK, &list)
}

#[derive(Serialize)]
struct ComponentInfo<'a> {
    id: &'a str,
    kind: ComponentKind,
    cost: u64,
}

#[derive(Serialize)]
struct AttributeInfo<'a> {
    name: &'a str,
    /// Enumeration labels with their encoded values; empty for plain reals.
    labels: BTreeMap<&'a str, f64>,
}

#[derive(Serialize)]
struct ActivityInfo<'a> {
    name: &'a str,
    attributes: Vec<AttributeInfo<'a>>,
}

#[derive(Serialize)]
struct Structure<'a> {
    id: &'a str,
    name: Option<&'a str>,
    components: Vec<ComponentInfo<'a>>,
    activities: Vec<ActivityInfo<'a>>,
}

async fn model_structure(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Response {
    let Some(m) = state.models.get(&id) else {
        return error(StatusCode::NOT_FOUND, format!("no model `{id}`"));
    };
    let model = &m.compiled.model;
    let sigs = &model.signatures;
    let costs = model.cost_model();
    let components = m
        .compiled
        .components
        .iter()
        .map(|c| ComponentInfo {
            id: &c.id,
            kind: c.kind,
            cost: costs.get(&c.id).unwrap_or(0),
        })
        .collect();
    let activities = sigs
        .activities()
        .map(|(_, s)| ActivityInfo {
            name: &s.name,
            attributes: s
                .attributes
                .iter()
                .map(|a| AttributeInfo {
                    name: sigs.attribute_name(*a),
                    labels: model.enums.labels(*a).collect(),
                })
                .collect(),
        })
        .collect();
    json(
        StatusCode::OK,
        &Structure {
            id: &m.id,
            name: model.name.as_deref(),
            components,
            activities,
        },
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    model: String,
}

#[derive(Serialize)]
struct Created<'a> {
    session_id: &'a str,
    model: &'a str,
    snapshot: &'a VerdictSnapshot,
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: CreateSession = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let Some(m) = state.models.get(&req.model) else {
        return error(StatusCode::NOT_FOUND, format!("no model `{}`", req.model));
    };
    state.evict_idle().await;
    let session = MonitorSession::new(m.compiled.monitor.clone());
    let snapshot = session.current().clone();
    let id = uuid::Uuid::new_v4().to_string();
    let now = Instant::now();
    let record = SessionRecord {
        model_id: m.id.clone(),
        session,
        created: now,
        last_active: now,
    };
    state
        .sessions
        .write()
        .expect("session table lock")
        .insert(id.clone(), Arc::new(Mutex::new(record)));
    json(
        StatusCode::CREATED,
        &Created {
            session_id: &id,
            model: &m.id,
            snapshot: &snapshot,
        },
    )
}

/// Runs `f` on a live session, refreshing its activity time; expired
/// sessions are dropped and reported missing.
async fn with_session(
    state: &AppState,
    id: &str,
    f: impl FnOnce(&mut SessionRecord, &LoadedModel) -> Response,
) -> Response {
    let Some(rec) = state.session(id) else {
        return no_session(id);
    };
    let mut rec = rec.lock().await;
    if state.is_expired(&rec) {
        drop(rec);
        state.remove(id);
        return no_session(id);
    }
    rec.last_active = Instant::now();
    let model = state.models[&rec.model_id].clone();
    f(&mut rec, &model)
}

fn parse_event(body: &[u8], model: &LoadedModel) -> Result<hymon::condition::Event, Response> {
    let raw: RawEvent =
        serde_json::from_slice(body).map_err(|e| error(StatusCode::BAD_REQUEST, e.to_string()))?;
    raw.resolve(&model.compiled.model)
        .map_err(|e| error(StatusCode::BAD_REQUEST, e.to_string()))
}

async fn post_event(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Response {
    with_session(&state, &id, |rec, model| {
        let event = match parse_event(&body, model) {
            Ok(e) => e,
            Err(r) => return r,
        };
        match rec.session.step(event) {
            Ok(snap) => json(StatusCode::OK, &snap),
            Err(e) => error(StatusCode::BAD_REQUEST, e.to_string()),
        }
    })
    .await
}

async fn what_if(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Response {
    with_session(&state, &id, |rec, model| {
        let event = match parse_event(&body, model) {
            Ok(e) => e,
            Err(r) => return r,
        };
        match rec.session.what_if(&event) {
            Ok(snap) => json(StatusCode::OK, &snap),
            Err(e) => error(StatusCode::BAD_REQUEST, e.to_string()),
        }
    })
    .await
}

async fn recommendations(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Response {
    with_session(&state, &id, |rec, _| {
        json(StatusCode::OK, &rec.session.recommend())
    })
    .await
}

#[derive(Serialize)]
struct SessionState<'a> {
    session_id: &'a str,
    model: &'a str,
    age_secs: u64,
    history: Vec<EventEcho>,
    snapshots: &'a [VerdictSnapshot],
    current: &'a VerdictSnapshot,
}

async fn session_state(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Response {
    with_session(&state, &id, |rec, _| {
        let monitor = rec.session.monitor();
        let history = rec.session.history().iter().map(|e| monitor.echo(e)).collect();
        json(
            StatusCode::OK,
            &SessionState {
                session_id: &id,
                model: &rec.model_id,
                age_secs: rec.created.elapsed().as_secs(),
                history,
                snapshots: rec.session.log(),
                current: rec.session.current(),
            },
        )
    })
    .await
}

async fn delete_session(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Response {
    if state.remove(&id) {
        StatusCode::NO_CONTENT.into_response()
    } else {
        no_session(&id)
    }
}

/// Serves until the process is stopped, sweeping idle sessions once a
/// minute.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.evict_idle().await;
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
