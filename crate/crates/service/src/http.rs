//! JSON API over stored bundles.
//!
//! Bundles are immutable once written, so reads share cached copies freely.
//! Ingestion holds a per-document lock; different documents ingest in
//! parallel on the blocking pool.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use nestgraph_core::decomposition::ExtractionBackend;
use nestgraph_core::graph_model::{NodeId, SentenceId};
use nestgraph_core::review::{neighborhood, node_for_span};

use crate::bundle::{DocumentBundle, Store, StoreError};
use crate::pipeline::{document_id, ingest, IngestConfig, IngestError};
use crate::svg::export_svg;

pub struct AppState {
    store: Store,
    backend: Arc<dyn ExtractionBackend>,
    config: IngestConfig,
    cache: RwLock<HashMap<String, Arc<DocumentBundle>>>,
    ingesting: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl AppState {
    pub fn new(store: Store, backend: Arc<dyn ExtractionBackend>, config: IngestConfig) -> Arc<Self> {
        Arc::new(Self {
            store,
            backend,
            config,
            cache: RwLock::default(),
            ingesting: Mutex::default(),
        })
    }

    fn bundle(&self, id: &str) -> Result<Arc<DocumentBundle>, ApiError> {
        if let Some(b) = self.cache.read().expect("cache poisoned").get(id) {
            return Ok(b.clone());
        }
        let bundle = Arc::new(self.store.load(id)?);
        self.cache
            .write()
            .expect("cache poisoned")
            .insert(id.to_string(), bundle.clone());
        Ok(bundle)
    }

    fn ingest_lock(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.ingesting
            .lock()
            .expect("lock table poisoned")
            .entry(id.to_string())
            .or_default()
            .clone()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::NotFound(_) | StoreError::BadId(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        let status = match &e {
            IngestError::EmptyText | IngestError::Config(_) => StatusCode::BAD_REQUEST,
            IngestError::Sentence { cause, .. } if cause.is_backend() => StatusCode::BAD_GATEWAY,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub sentences: usize,
}

async fn create(State(app): State<Arc<AppState>>, text: String) -> Result<(StatusCode, Json<Created>), ApiError> {
    let id = document_id(&text, &app.config);
    let lock = app.ingest_lock(&id);
    let _held = lock.lock().await;
    if app.store.contains(&id) {
        let b = app.bundle(&id)?;
        return Ok((StatusCode::OK, Json(Created { id, sentences: b.sentence_count() })));
    }
    let worker = app.clone();
    let bundle = tokio::task::spawn_blocking(move || ingest(&text, &worker.config, worker.backend.as_ref()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    app.store.save(&bundle)?;
    let created = Created {
        id: bundle.id.clone(),
        sentences: bundle.sentence_count(),
    };
    app.cache
        .write()
        .expect("cache poisoned")
        .insert(bundle.id.clone(), Arc::new(bundle));
    Ok((StatusCode::CREATED, Json(created)))
}

async fn document(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(&*app.bundle(&id)?).into_response())
}

async fn timeline(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(&app.bundle(&id)?.timeline).into_response())
}

async fn entities(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(&app.bundle(&id)?.entities).into_response())
}

async fn hover(State(app): State<Arc<AppState>>, Path((id, node)): Path<(String, String)>) -> Result<Response, ApiError> {
    let bundle = app.bundle(&id)?;
    let n = neighborhood(&bundle.document, &NodeId::new(node))
        .map_err(|e| ApiError::new(StatusCode::NOT_FOUND, e.to_string()))?;
    Ok(Json(n).into_response())
}

#[derive(Debug, Deserialize)]
struct SpanQuery {
    /// Sentence id, or its order as a plain number.
    sentence: String,
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SpanHit {
    pub node_id: Option<NodeId>,
}

async fn span(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<SpanQuery>,
) -> Result<Json<SpanHit>, ApiError> {
    let bundle = app.bundle(&id)?;
    let sentence = match q.sentence.parse::<usize>() {
        Ok(order) => SentenceId::from_order(order),
        Err(_) => SentenceId::new(q.sentence),
    };
    if bundle.document.sentence(&sentence).is_none() {
        return Err(ApiError::new(StatusCode::NOT_FOUND, format!("no sentence {sentence}")));
    }
    Ok(Json(SpanHit {
        node_id: node_for_span(&bundle.document, &sentence, q.offset),
    }))
}

#[derive(Debug, Deserialize)]
struct SvgQuery {
    prefix: Option<usize>,
}

async fn svg(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<SvgQuery>,
) -> Result<Response, ApiError> {
    let bundle = app.bundle(&id)?;
    let k = q.prefix.unwrap_or_else(|| bundle.sentence_count());
    let body = export_svg(&bundle, k).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], body).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/documents", post(create))
        .route("/documents/{id}", get(document))
        .route("/documents/{id}/timeline", get(timeline))
        .route("/documents/{id}/entities", get(entities))
        .route("/documents/{id}/neighborhood/{node}", get(hover))
        .route("/documents/{id}/span", get(span))
        .route("/documents/{id}/svg", get(svg))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
