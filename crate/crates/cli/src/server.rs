//! HTTP adapter over the library and the handle store.

use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::Router;
use ewqbaf::contest::ATTAINABILITY_SLACK;
use ewqbaf::{parse_qbaf, ArgumentId, ContestRequest, Qbaf, QbafData, QbafError, SemanticsKind, DEFAULT_PERTURBATION};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::store::{Handle, Store};
use crate::views::{self, canonical, IntervalView};

pub const MAX_EDGES: usize = 100_000;
pub const MAX_ITERATIONS: usize = 100_000;
const MAX_BODY_BYTES: usize = 64 << 20;

pub struct AppState {
    pub store: Store,
}

pub fn router(state: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/qbafs", post(create))
        .route("/qbafs/{id}", get(fetch))
        .route("/qbafs/{id}/weights", put(replace_weights))
        .route("/qbafs/{id}/strengths", get(strengths))
        .route("/qbafs/{id}/graes", get(graes))
        .route("/qbafs/{id}/attainability", get(attainability))
        .route("/qbafs/{id}/contest", post(contest))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, body: json!({ "error": message.into() }) }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn unattainable(interval: &IntervalView, target: f64) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: json!({
                "error": format!("desired strength {target} is outside the attainable interval"),
                "interval": interval,
            }),
        }
    }
}

impl From<QbafError> for ApiError {
    fn from(e: QbafError) -> Self {
        let status = match &e {
            QbafError::UnknownArgument(_) | QbafError::UnknownEdge { .. } => StatusCode::NOT_FOUND,
            QbafError::Cyclic => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        let mut body = json!({ "error": e.to_string() });
        if let QbafError::Invalid(violations) = &e {
            body["violations"] = violations.iter().map(|v| v.to_string()).collect();
        }
        Self { status, body }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, json_body(canonical(&self.body))).into_response()
    }
}

fn json_body(body: String) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], body)
}

type ApiResult = Result<Response, ApiError>;

fn ok_json<T: Serialize>(status: StatusCode, value: &T) -> ApiResult {
    Ok((status, json_body(canonical(value))).into_response())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

fn lookup(state: &AppState, id: &str) -> Result<Handle, ApiError> {
    state.store.get(id).ok_or_else(|| ApiError::not_found(format!("unknown qbaf handle: {id}")))
}

fn parse_semantics(s: Option<&str>) -> Result<SemanticsKind, ApiError> {
    s.map_or(Ok(SemanticsKind::Mlp), |s| s.parse().map_err(|e: QbafError| ApiError::bad_request(e.to_string())))
}

fn store_error(e: std::io::Error) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("store: {e}"))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HandleView {
    pub id: String,
    pub created_at: u64,
    pub qbaf: QbafData,
}

impl From<&Handle> for HandleView {
    fn from(h: &Handle) -> Self {
        Self { id: h.id.clone(), created_at: h.created_at, qbaf: h.qbaf.to_data() }
    }
}

async fn create(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let q = parse_qbaf(&body)?;
    if q.edges().len() > MAX_EDGES {
        return Err(ApiError::bad_request(format!("graph exceeds {MAX_EDGES} edges")));
    }
    let handle = state.store.insert(q).map_err(store_error)?;
    ok_json(StatusCode::CREATED, &HandleView::from(&handle))
}

async fn fetch(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    ok_json(StatusCode::OK, &HandleView::from(&lookup(&state, &id)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightUpdate {
    source: ArgumentId,
    target: ArgumentId,
    weight: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsBody {
    weights: Vec<WeightUpdate>,
}

/// Sets the listed edge weights; edges not listed keep theirs.
async fn replace_weights(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let handle = lookup(&state, &id)?;
    let update: WeightsBody =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))?;
    let q = &handle.qbaf;
    let mut weights = q.weights();
    for w in &update.weights {
        let e = q
            .edge_index(w.source.as_str(), w.target.as_str())
            .ok_or_else(|| ApiError::from(QbafError::UnknownEdge {
                source_id: w.source.to_string(),
                target_id: w.target.to_string(),
            }))?;
        weights[e] = w.weight;
    }
    let revised = q.with_weights(&weights)?;
    let handle = state
        .store
        .replace(&id, revised)
        .map_err(store_error)?
        .ok_or_else(|| ApiError::not_found(format!("unknown qbaf handle: {id}")))?;
    ok_json(StatusCode::OK, &HandleView::from(&handle))
}

#[derive(Debug, Deserialize)]
struct SemanticsQuery {
    semantics: Option<String>,
}

async fn strengths(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<SemanticsQuery>, QueryRejection>,
) -> ApiResult {
    let Query(query) = query?;
    let kind = parse_semantics(query.semantics.as_deref())?;
    let q = lookup(&state, &id)?.qbaf;
    let view = blocking(move || views::strengths(&q, kind)).await??;
    ok_json(StatusCode::OK, &view)
}

#[derive(Debug, Deserialize)]
struct GraesQuery {
    topic: String,
    semantics: Option<String>,
    #[serde(default)]
    exact: bool,
    eps: Option<f64>,
}

async fn graes(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<GraesQuery>, QueryRejection>,
) -> ApiResult {
    let Query(query) = query?;
    let kind = parse_semantics(query.semantics.as_deref())?;
    let q = lookup(&state, &id)?.qbaf;
    let eps = query.eps.unwrap_or(DEFAULT_PERTURBATION);
    let view = blocking(move || views::graes(&q, kind, &query.topic, query.exact, eps)).await??;
    ok_json(StatusCode::OK, &view)
}

#[derive(Debug, Deserialize)]
struct TopicQuery {
    topic: String,
    semantics: Option<String>,
}

async fn attainability(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<TopicQuery>, QueryRejection>,
) -> ApiResult {
    let Query(query) = query?;
    let kind = parse_semantics(query.semantics.as_deref())?;
    let q = lookup(&state, &id)?.qbaf;
    let view = blocking(move || views::interval(&q, kind, &query.topic)).await??;
    ok_json(StatusCode::OK, &view)
}

fn wants_event_stream(headers: &HeaderMap) -> bool {
    headers
        .get_all(header::ACCEPT)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .any(|v| v.contains("text/event-stream"))
}

#[derive(Debug, Serialize)]
struct ProgressEvent {
    attempt: usize,
    iteration: usize,
    strength: f64,
}

fn checked_request(q: &Qbaf, body: &[u8]) -> Result<ContestRequest, ApiError> {
    let req: ContestRequest =
        serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))?;
    req.validate()?;
    if req.max_iterations > MAX_ITERATIONS {
        return Err(ApiError::bad_request(format!("max_iterations exceeds {MAX_ITERATIONS}")));
    }
    if q.argument_index(req.topic.as_str()).is_none() {
        return Err(QbafError::UnknownArgument(req.topic.to_string()).into());
    }
    if !q.is_acyclic() {
        return Err(QbafError::Cyclic.into());
    }
    Ok(req)
}

async fn contest(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<SemanticsQuery>, QueryRejection>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let Query(query) = query?;
    let kind = parse_semantics(query.semantics.as_deref())?;
    let q = lookup(&state, &id)?.qbaf;
    let req = checked_request(&q, &body)?;

    let (q, req) = {
        let (q2, req2) = (q.clone(), req.clone());
        let interval = blocking(move || views::interval(&q2, kind, req2.topic.as_str())).await??;
        if !(interval.min - ATTAINABILITY_SLACK..=interval.max + ATTAINABILITY_SLACK).contains(&req.desired_strength) {
            return Err(ApiError::unattainable(&interval, req.desired_strength));
        }
        (q, req)
    };

    if !wants_event_stream(&headers) {
        let view = blocking(move || views::contest(&q, kind, &req, |_| {})).await??;
        return ok_json(StatusCode::OK, &view);
    }

    let (tx, rx) = tokio::sync::mpsc::unbounded_channel::<Event>();
    tokio::task::spawn_blocking(move || {
        let progress_tx = tx.clone();
        let result = views::contest(&q, kind, &req, |p| {
            let data = ProgressEvent { attempt: p.attempt, iteration: p.iteration, strength: p.strength };
            let _ = progress_tx.send(Event::default().event("progress").data(compact(&data)));
        });
        let last = match result {
            Ok(view) => Event::default().event("outcome").data(compact(&view)),
            Err(e) => Event::default().event("error").data(compact(&json!({ "error": e.to_string() }))),
        };
        let _ = tx.send(last);
    });
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        rx.recv().await.map(|ev| (Ok::<_, Infallible>(ev), rx))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()).into_response())
}

fn compact<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("events serialize")
}
