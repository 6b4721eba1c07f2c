//! HTTP front end of the annotation store.
//!
//! | method | path | result |
//! |---|---|---|
//! | GET | `/api/tasks/next?annotator=ID` | next post, or 204 when the queue is empty |
//! | POST | `/api/labels` | stores an annotation record: 201, 409 duplicate, 404 unknown post, 422 bad label |
//! | GET | `/api/labels?post_id=ID` | stored records |
//! | GET | `/api/labels/aggregated` | final labels |
//! | GET | `/api/adjudication` | posts waiting for a consensus label |
//! | GET | `/api/stats/agreement?multi_only=true` | agreement report |
//! | GET | `/api/stats/labels` | per-label counts and queue sizes |
//! | GET | `/api/guidelines` | annotation guidelines (markdown) |
//! | POST | `/api/annotators` | registers `{"id": ...}` |
//! | GET | `/ui/...` | browser interface |
//!
//! The annotator may also be given in the `x-annotator-id` header.

use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Redirect, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use braglab_core::annotation::{AnnotationRecord, AnnotationStore, GUIDELINES};
use braglab_core::Error;
use serde::Deserialize;
use serde_json::json;

pub const ANNOTATOR_HEADER: &str = "x-annotator-id";

const INDEX_HTML: &str = include_str!("../ui/index.html");
const APP_JS: &str = include_str!("../ui/app.js");
const STYLE_CSS: &str = include_str!("../ui/style.css");

#[derive(Clone)]
struct AppState {
    store: Arc<AnnotationStore>,
    ui_dir: Option<Arc<PathBuf>>,
}

/// Builds the router. With `ui_dir`, files under `/ui` come from that
/// directory instead of the bundled page.
pub fn router(store: Arc<AnnotationStore>, ui_dir: Option<PathBuf>) -> Router {
    let state = AppState {
        store,
        ui_dir: ui_dir.map(Arc::new),
    };
    Router::new()
        .route("/", get(|| async { Redirect::permanent("/ui/") }))
        .route("/api/tasks/next", get(next_task))
        .route("/api/labels", post(submit).get(list_labels))
        .route("/api/labels/aggregated", get(aggregated))
        .route("/api/adjudication", get(adjudication))
        .route("/api/stats/agreement", get(agreement))
        .route("/api/stats/labels", get(label_stats))
        .route("/api/guidelines", get(guidelines))
        .route("/api/annotators", post(register).get(annotators))
        .route("/ui", get(|| async { Redirect::permanent("/ui/") }))
        .route("/ui/", get(ui_file))
        .route("/ui/{*path}", get(ui_file))
        .with_state(state)
}

/// Serves until interrupted.
pub async fn serve(store: Arc<AnnotationStore>, addr: SocketAddr, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("annotation service listening on http://{}/ui/", listener.local_addr()?);
    axum::serve(listener, router(store, ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::Conflict(_) => StatusCode::CONFLICT,
            Error::UnknownAnnotator(_) => StatusCode::FORBIDDEN,
            Error::InvalidInput(_) | Error::Json(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

#[derive(Deserialize)]
struct AnnotatorQuery {
    annotator: Option<String>,
}

async fn next_task(
    State(s): State<AppState>,
    Query(q): Query<AnnotatorQuery>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let id = q
        .annotator
        .or_else(|| headers.get(ANNOTATOR_HEADER).and_then(|v| v.to_str().ok()).map(String::from))
        .ok_or_else(|| bad_request("missing annotator id"))?;
    Ok(match s.store.next_task(&id)? {
        Some(post) => Json(post).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn submit(
    State(s): State<AppState>,
    headers: HeaderMap,
    body: Result<Json<AnnotationRecord>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(record) = body.map_err(|e| ApiError(e.status(), e.body_text()))?;
    if let Some(h) = headers.get(ANNOTATOR_HEADER).and_then(|v| v.to_str().ok()) {
        if h != record.annotator_id {
            return Err(ApiError(
                StatusCode::FORBIDDEN,
                format!("record annotator `{}` does not match header `{h}`", record.annotator_id),
            ));
        }
    }
    let store = s.store.clone();
    let stored = record.clone();
    tokio::task::spawn_blocking(move || store.submit(stored))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

#[derive(Deserialize)]
struct LabelQuery {
    post_id: Option<String>,
}

async fn list_labels(State(s): State<AppState>, Query(q): Query<LabelQuery>) -> Response {
    match q.post_id {
        Some(id) => Json(s.store.records_for(&id)).into_response(),
        None => Json(s.store.records()).into_response(),
    }
}

async fn aggregated(State(s): State<AppState>) -> Response {
    Json(s.store.aggregated()).into_response()
}

async fn adjudication(State(s): State<AppState>) -> Response {
    Json(s.store.adjudication_queue()).into_response()
}

#[derive(Deserialize)]
struct AgreementQuery {
    multi_only: Option<bool>,
}

async fn agreement(State(s): State<AppState>, Query(q): Query<AgreementQuery>) -> Response {
    Json(s.store.agreement(q.multi_only.unwrap_or(true))).into_response()
}

async fn label_stats(State(s): State<AppState>) -> Response {
    Json(json!({
        "label_counts": s.store.label_counts(),
        "records": s.store.records().len(),
        "posts": s.store.posts().len(),
        "adjudication_queue": s.store.adjudication_queue().len(),
    }))
    .into_response()
}

async fn guidelines() -> Response {
    ([(header::CONTENT_TYPE, "text/markdown; charset=utf-8")], GUIDELINES).into_response()
}

#[derive(Deserialize)]
struct Registration {
    id: String,
}

async fn register(State(s): State<AppState>, body: Result<Json<Registration>, JsonRejection>) -> Result<Response, ApiError> {
    let Json(reg) = body.map_err(|e| ApiError(e.status(), e.body_text()))?;
    let store = s.store.clone();
    let id = reg.id.clone();
    let created = tokio::task::spawn_blocking(move || store.register_annotator(&id))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(json!({ "id": reg.id }))).into_response())
}

async fn annotators(State(s): State<AppState>) -> Response {
    Json(s.store.annotators()).into_response()
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json" | "map") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        Some("woff2") => "font/woff2",
        _ => "application/octet-stream",
    }
}

async fn ui_file(State(s): State<AppState>, path: Option<axum::extract::Path<String>>) -> Response {
    let rel = path.map(|p| p.0).unwrap_or_default();
    let rel = if rel.is_empty() || rel.ends_with('/') { format!("{rel}index.html") } else { rel };
    let rel_path = PathBuf::from(&rel);
    if rel_path.components().any(|c| !matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let ct = content_type(&rel_path);
    if let Some(dir) = &s.ui_dir {
        return match tokio::fs::read(dir.join(&rel_path)).await {
            Ok(bytes) => ([(header::CONTENT_TYPE, ct)], bytes).into_response(),
            Err(_) => StatusCode::NOT_FOUND.into_response(),
        };
    }
    let body = match rel.as_str() {
        "index.html" => INDEX_HTML,
        "app.js" => APP_JS,
        "style.css" => STYLE_CSS,
        _ => return StatusCode::NOT_FOUND.into_response(),
    };
    ([(header::CONTENT_TYPE, ct)], body).into_response()
}
