//! HTTP routes and per-session state.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Mutex as AsyncMutex;
use udfcloth::mesh::load_mesh;
use udfcloth::Error;

use crate::engine::{self, now_unix, EngineConfig, Model, SessionState};

pub const DEFAULT_TTL: Duration = Duration::from_secs(3600);

/// An error response with a machine-readable code.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}"))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::EmptySketch => (StatusCode::UNPROCESSABLE_ENTITY, "empty_sketch"),
            Error::Image(_) | Error::Format(_) => (StatusCode::BAD_REQUEST, "invalid_image"),
            Error::InvalidArgument(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            Error::EmptyContour | Error::DegenerateGradient { .. } | Error::EmptyMesh(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "reconstruction_failed")
            }
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "message": self.message }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;
type SharedSession = Arc<AsyncMutex<SessionState>>;

/// Directory holding one JSON and one OBJ file per session.
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    fn paths(&self, id: &str) -> (PathBuf, PathBuf) {
        (self.dir.join(format!("{id}.json")), self.dir.join(format!("{id}.obj")))
    }

    pub fn save(&self, id: &str, state: &SessionState) -> udfcloth::Result<()> {
        let (json_path, obj_path) = self.paths(id);
        udfcloth::mesh::save_mesh(&state.mesh, obj_path)?;
        std::fs::write(json_path, serde_json::to_vec_pretty(state)?)?;
        Ok(())
    }

    pub fn remove(&self, id: &str) {
        let (a, b) = self.paths(id);
        let _ = std::fs::remove_file(a);
        let _ = std::fs::remove_file(b);
    }

    /// Sessions updated within `ttl`; stale or unreadable files are skipped.
    pub fn load_all(&self, ttl: Duration) -> Vec<(String, SessionState)> {
        let Ok(entries) = std::fs::read_dir(&self.dir) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(String::from) else {
                continue;
            };
            match Self::load_one(&path, &self.paths(&id).1) {
                Ok(state) if now_unix().saturating_sub(state.updated_unix) <= ttl.as_secs() => out.push((id, state)),
                Ok(_) => self.remove(&id),
                Err(e) => log::warn!("skipping stored session {id}: {e}"),
            }
        }
        out
    }

    fn load_one(json_path: &Path, obj_path: &Path) -> udfcloth::Result<SessionState> {
        let mut state: SessionState = serde_json::from_slice(&std::fs::read(json_path)?)?;
        state.mesh = load_mesh(obj_path)?;
        Ok(state)
    }
}

/// Shared server state.
pub struct AppState {
    model: Option<Arc<Model>>,
    config: EngineConfig,
    sessions: Mutex<HashMap<String, SharedSession>>,
    store: Option<SessionStore>,
    ttl: Duration,
}

impl AppState {
    pub fn new(model: Option<Model>, config: EngineConfig, store: Option<SessionStore>, ttl: Duration) -> Self {
        let mut sessions = HashMap::new();
        if let Some(store) = &store {
            for (id, state) in store.load_all(ttl) {
                sessions.insert(id, Arc::new(AsyncMutex::new(state)));
            }
            log::info!("restored {} sessions", sessions.len());
        }
        Self {
            model: model.map(Arc::new),
            config,
            sessions: Mutex::new(sessions),
            store,
            ttl,
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session map").len()
    }

    fn model(&self) -> ApiResult<Arc<Model>> {
        self.model
            .clone()
            .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "model_unavailable", "no decoder checkpoint loaded"))
    }

    fn session(&self, id: &str) -> ApiResult<SharedSession> {
        self.sessions
            .lock()
            .expect("session map")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    fn persist(&self, id: &str, state: &SessionState) {
        if let Some(store) = &self.store {
            if let Err(e) = store.save(id, state) {
                log::warn!("could not persist session {id}: {e}");
            }
        }
    }

    /// Drops sessions idle for longer than the TTL.
    pub async fn sweep(&self) {
        let now = now_unix();
        let entries: Vec<(String, SharedSession)> = self
            .sessions
            .lock()
            .expect("session map")
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for (id, s) in entries {
            let stale = now.saturating_sub(s.lock().await.updated_unix) > self.ttl.as_secs();
            if stale {
                self.sessions.lock().expect("session map").remove(&id);
                if let Some(store) = &self.store {
                    store.remove(&id);
                }
                log::info!("expired session {id}");
            }
        }
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> udfcloth::Result<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

fn mesh_url(id: &str) -> String {
    format!("/api/session/{id}/model.obj")
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PoseBody {
    pub azimuth: f64,
    pub elevation: f64,
}

async fn health(State(app): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({ "model_loaded": app.model.is_some(), "sessions": app.session_count() }))
}

async fn generate(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let model = app.model()?;
    let cfg = app.config.clone();
    let (state, info) = blocking(move || engine::generate(&model, &cfg, &body)).await?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    app.persist(&id, &state);
    let response = json!({
        "session_id": id,
        "mesh_url": mesh_url(&id),
        "chamfer_score": info.chamfer_score,
        "retrieval_score": info.retrieval_score,
        "shape_name": state.shape_name,
        "pose": PoseBody { azimuth: state.pose.azimuth_deg(), elevation: state.pose.elevation_deg() },
        "diverged": info.diverged,
    });
    app.sessions
        .lock()
        .expect("session map")
        .insert(id, Arc::new(AsyncMutex::new(state)));
    Ok(Json(response))
}

async fn session_info(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<serde_json::Value>> {
    let s = app.session(&id)?;
    let s = s.lock().await;
    Ok(Json(json!({
        "session_id": id,
        "z": s.z,
        "z_init": s.z_init,
        "pose": PoseBody { azimuth: s.pose.azimuth_deg(), elevation: s.pose.elevation_deg() },
        "shape_name": s.shape_name,
        "vertex_count": s.mesh.vertices.len(),
        "triangle_count": s.mesh.triangles.len(),
        "created_unix": s.created_unix,
        "updated_unix": s.updated_unix,
    })))
}

async fn capture(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(pose): Json<PoseBody>,
) -> ApiResult<Response> {
    let model = app.model()?;
    let cfg = app.config.clone();
    let mut guard = app.session(&id)?.lock_owned().await;
    let mut state = guard.clone();
    let (state, png) = blocking(move || {
        let sketch = engine::capture(&model, &mut state, &cfg, pose.azimuth, pose.elevation)?;
        Ok((state, sketch.to_png_bytes()?))
    })
    .await?;
    app.persist(&id, &state);
    *guard = state;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn edit(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let model = app.model()?;
    let cfg = app.config.clone();
    let mut guard = app.session(&id)?.lock_owned().await;
    let mut state = guard.clone();
    let (state, info) = blocking(move || {
        let info = engine::edit(&model, &mut state, &cfg, &body)?;
        Ok((state, info))
    })
    .await?;
    app.persist(&id, &state);
    *guard = state;
    Ok(Json(json!({
        "mesh_url": mesh_url(&id),
        "chamfer_before": info.chamfer_before,
        "chamfer_after": info.chamfer_after,
        "steps": info.steps,
        "diverged": info.diverged,
        "converged": info.converged,
        "history": info.history,
    })))
}

async fn reset(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<serde_json::Value>> {
    let model = app.model()?;
    let cfg = app.config.clone();
    let mut guard = app.session(&id)?.lock_owned().await;
    let mut state = guard.clone();
    let state = blocking(move || engine::reset(&model, &mut state, &cfg).map(|_| state)).await?;
    app.persist(&id, &state);
    *guard = state;
    Ok(Json(json!({ "mesh_url": mesh_url(&id) })))
}

async fn model_obj(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let s = app.session(&id)?;
    let bytes = engine::obj_bytes(&s.lock().await.mesh)?;
    Ok(([(header::CONTENT_TYPE, "model/obj")], bytes).into_response())
}

pub fn router(app: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/generate", post(generate))
        .route("/api/session/{id}", get(session_info))
        .route("/api/session/{id}/capture", post(capture))
        .route("/api/session/{id}/edit", post(edit))
        .route("/api/session/{id}/reset", post(reset))
        .route("/api/session/{id}/model.obj", get(model_obj))
        .with_state(app);
    match ui_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Binds `addr`, starts the TTL sweeper and serves until the future is dropped.
pub async fn serve(app: Arc<AppState>, addr: SocketAddr, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    serve_on(app, listener, ui_dir).await
}

pub async fn serve_on(app: Arc<AppState>, listener: tokio::net::TcpListener, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let sweeper = app.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.sweep().await;
        }
    });
    axum::serve(listener, router(app, ui_dir)).await
}
