use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use onscreen_core::calibration::{write_export, InBoxAnswer, OutsideAnswer, Review};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::store::{ReviewStore, StoreError};

#[derive(Clone)]
pub struct AppState {
    store: Arc<RwLock<ReviewStore>>,
    rng: Arc<Mutex<StdRng>>,
    frames_dir: PathBuf,
}

impl AppState {
    pub fn new(store: ReviewStore, frames_dir: PathBuf, seed: u64) -> Self {
        Self {
            store: Arc::new(RwLock::new(store)),
            rng: Arc::new(Mutex::new(StdRng::seed_from_u64(seed))),
            frames_dir,
        }
    }

    pub fn store(&self) -> &Arc<RwLock<ReviewStore>> {
        &self.store
    }
}

/// Review document as posted by the browser. `submitted_at` is stamped by
/// the server when absent.
#[derive(Debug, Deserialize)]
pub struct ReviewSubmission {
    pub task_id: String,
    pub reviewer_id: String,
    pub in_box: InBoxAnswer,
    pub outside_box: OutsideAnswer,
    #[serde(default)]
    pub submitted_at: Option<String>,
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    reviewer: Option<String>,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn next_task(State(s): State<AppState>, Query(q): Query<NextQuery>) -> Response {
    let Some(reviewer) = q.reviewer.filter(|r| !r.trim().is_empty()) else {
        return error(StatusCode::BAD_REQUEST, "missing reviewer");
    };
    let store = s.store.read().expect("store lock");
    let mut rng = s.rng.lock().expect("rng lock");
    match store.next_task(&reviewer, &mut *rng) {
        Some(task) => Json(task.clone()).into_response(),
        None => Json(json!({ "done": true })).into_response(),
    }
}

async fn frame(State(s): State<AppState>, Path(task_id): Path<String>) -> Response {
    let rel = match s.store.read().expect("store lock").task(&task_id) {
        Some(t) => t.frame.clone(),
        None => return error(StatusCode::NOT_FOUND, format!("unknown task {task_id}")),
    };
    let path = s.frames_dir.join(&rel);
    match std::fs::read(&path) {
        Ok(bytes) => {
            let mime = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
                Some("png") => "image/png",
                Some("jpg" | "jpeg") => "image/jpeg",
                _ => "application/octet-stream",
            };
            ([(header::CONTENT_TYPE, mime)], bytes).into_response()
        }
        Err(_) => error(StatusCode::NOT_FOUND, format!("frame {rel} not found")),
    }
}

async fn submit(State(s): State<AppState>, body: Result<Json<ReviewSubmission>, JsonRejection>) -> Response {
    let Json(sub) = match body {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.body_text()),
    };
    let review = Review {
        task_id: sub.task_id,
        reviewer_id: sub.reviewer_id,
        in_box: sub.in_box,
        outside_box: sub.outside_box,
        submitted_at: sub
            .submitted_at
            .unwrap_or_else(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
    };
    let outcome = s.store.write().expect("store lock").submit(review);
    match outcome {
        Ok(o) => {
            if let Some(prev) = o.replaced {
                log::info!("review {} replaces {}", o.seq, prev);
            }
            StatusCode::NO_CONTENT.into_response()
        }
        Err(e @ StoreError::UnknownTask(_)) => error(StatusCode::NOT_FOUND, e.to_string()),
        Err(e @ StoreError::EmptyReviewer) => error(StatusCode::BAD_REQUEST, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn progress(State(s): State<AppState>) -> Response {
    Json(s.store.read().expect("store lock").progress()).into_response()
}

async fn export(State(s): State<AppState>) -> Response {
    let rows = s.store.read().expect("store lock").export_rows();
    let mut buf = Vec::new();
    match write_export(&rows, &mut buf) {
        Ok(()) => ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], buf).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

/// API routes, plus static files from `static_dir` for every other path.
pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/task/next", get(next_task))
        .route("/api/frame/:task_id", get(frame))
        .route("/api/review", post(submit))
        .route("/api/progress", get(progress))
        .route("/api/export", get(export))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(addr: SocketAddr, app: Router) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("review service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await
}
