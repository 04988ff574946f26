//! HTTP API over a document store: the triage queue, label submission,
//! retraining and the latest computed reports.
//!
//! Reads run concurrently. Label and retrain writes are serialized through
//! one write lock; a retrain trains against a read snapshot and only takes
//! the write lock to store the new model and scores.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use darkwatch_core::score::Hyperparams;
use darkwatch_core::textfeat::tag_text;
use darkwatch_core::triage::TriageError;
use darkwatch_core::{Clock, DocId, Label, Triage, TriageItem};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

/// Report artifacts read from the run directory, by response section.
pub const REPORT_FILES: [(&str, &str); 4] = [
    ("forum_stats", "forum_stats.json"),
    ("cluster_report", "clusters.json"),
    ("exposure_summary", "exposure.json"),
    ("risk_reports", "risk.json"),
];

pub const DEFAULT_QUEUE_LIMIT: usize = 50;
pub const MAX_QUEUE_LIMIT: usize = 1000;
pub const ANALYST_HEADER: &str = "x-analyst";

pub struct AppState {
    triage: RwLock<Triage>,
    retrain_gate: tokio::sync::Mutex<()>,
    reports_dir: PathBuf,
    hyperparams: Hyperparams,
    clock: Arc<dyn Clock>,
}

impl AppState {
    pub fn new(triage: Triage, reports_dir: impl Into<PathBuf>, hyperparams: Hyperparams, clock: Arc<dyn Clock>) -> Arc<Self> {
        Arc::new(Self {
            triage: RwLock::new(triage),
            retrain_gate: tokio::sync::Mutex::new(()),
            reports_dir: reports_dir.into(),
            hyperparams,
            clock,
        })
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }
}

impl From<TriageError> for ApiError {
    fn from(e: TriageError) -> Self {
        let status = match e.code() {
            "unknown-doc" => StatusCode::NOT_FOUND,
            "degenerate-labels" => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.code, "message": self.message}))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn poisoned() -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "state lock poisoned")
}

#[derive(Debug, Deserialize)]
struct QueueParams {
    limit: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueueResponse {
    pub items: Vec<TriageItem>,
    pub model_version: Option<u64>,
}

async fn queue(State(state): State<Arc<AppState>>, Query(params): Query<QueueParams>) -> ApiResult<QueueResponse> {
    let limit = params.limit.unwrap_or(DEFAULT_QUEUE_LIMIT).min(MAX_QUEUE_LIMIT);
    let triage = state.triage.read().map_err(|_| poisoned())?;
    Ok(Json(QueueResponse {
        items: triage.queue(limit),
        model_version: triage.model_version()?,
    }))
}

#[derive(Debug, Deserialize)]
struct LabelBody {
    doc_id: DocId,
    label: Label,
}

async fn label(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    body: Result<Json<LabelBody>, JsonRejection>,
) -> ApiResult<Value> {
    let Json(body) = body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad-request", e.body_text()))?;
    let analyst = headers
        .get(ANALYST_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .unwrap_or("analyst")
        .to_owned();
    let at = state.clock.now_secs();
    state
        .triage
        .write()
        .map_err(|_| poisoned())?
        .label(&body.doc_id, body.label, &analyst, at)?;
    Ok(Json(json!({"doc_id": body.doc_id, "label": body.label, "analyst": analyst})))
}

async fn retrain(State(state): State<Arc<AppState>>) -> ApiResult<Value> {
    let _gate = state.retrain_gate.lock().await;
    let worker = Arc::clone(&state);
    let summary = tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
        let plan = worker.triage.read().map_err(|_| poisoned())?.plan_retrain(worker.hyperparams)?;
        Ok(worker.triage.write().map_err(|_| poisoned())?.apply_retrain(&plan)?)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(json!({"model_version": summary.model_version, "train_size": summary.train_size})))
}

async fn doc(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Value> {
    let triage = state.triage.read().map_err(|_| poisoned())?;
    let id = DocId::from(id);
    let doc = triage
        .store()
        .get(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown-doc", format!("no document {}", id.as_str())))?;
    Ok(Json(json!({
        "document": doc,
        "label": doc.label,
        "keyword_tags": tag_text(&doc.text, triage.lexicon()),
    })))
}

/// Loads every report section present in `dir`. Missing sections are
/// `null` and listed under `not_computed`.
pub fn load_reports(dir: &Path) -> Result<Option<Value>, ApiError> {
    let mut body = serde_json::Map::new();
    let mut missing = Vec::new();
    for (section, file) in REPORT_FILES {
        let path = dir.join(file);
        match std::fs::read(&path) {
            Ok(bytes) => {
                let v: Value = serde_json::from_slice(&bytes).map_err(|e| {
                    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "corrupt-report", format!("{}: {e}", path.display()))
                })?;
                body.insert(section.to_owned(), v);
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                body.insert(section.to_owned(), Value::Null);
                missing.push(section);
            }
            Err(e) => {
                return Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io-error", e.to_string()));
            }
        }
    }
    if missing.len() == REPORT_FILES.len() {
        return Ok(None);
    }
    body.insert("not_computed".to_owned(), json!(missing));
    Ok(Some(Value::Object(body)))
}

async fn reports(State(state): State<Arc<AppState>>) -> ApiResult<Value> {
    load_reports(&state.reports_dir)?
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not-computed", "no pipeline stage has produced a report yet"))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not-found", "no such endpoint")
}

/// The API router. Static UI assets in `ui_dir`, when given, are served
/// under `/ui`.
pub fn router(state: Arc<AppState>, ui_dir: Option<&Path>) -> Router {
    let mut app = Router::new()
        .route("/api/queue", get(queue))
        .route("/api/label", post(label))
        .route("/api/retrain", post(retrain))
        .route("/api/reports", get(reports))
        .route("/api/doc/{id}", get(doc))
        .fallback(not_found)
        .with_state(state);
    if let Some(dir) = ui_dir {
        app = app.nest_service("/ui", ServeDir::new(dir).append_index_html_on_directories(true));
    }
    app
}

pub async fn serve(addr: SocketAddr, app: Router) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, app).await
}
