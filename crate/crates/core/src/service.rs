//! HTTP facade over a [`Session`].
//!
//! Reads share the session; label submissions take the write lock, so they
//! are applied one at a time and readers always observe a complete model.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::RwLock;

use crate::active::Side;
use crate::error::Error;
use crate::model::{LabelSource, ModelSnapshot};
use crate::session::Session;

pub type SharedSession = Arc<RwLock<Session>>;

/// Default number of hits for instance search.
pub const DEFAULT_SEARCH_LIMIT: usize = 20;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, detail: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: error.to_owned(),
                detail: detail.into(),
            },
        }
    }

    /// Maps engine errors onto status codes. `missing` is the status used
    /// for an unknown instance id, which differs between a bad request body
    /// and a missing resource in a query.
    fn from_engine(err: Error, missing: StatusCode) -> Self {
        let detail = err.to_string();
        match err {
            Error::UnknownInstance(_) => ApiError::new(missing, "unknown_instance", detail),
            Error::ScoreOutOfRange(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "score_out_of_range", detail)
            }
            Error::SelfPair(_) => ApiError::new(StatusCode::CONFLICT, "self_pair", detail),
            Error::InvalidArgument(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_argument", detail)
            }
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", detail),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn params<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(t)| t)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", e.body_text()))
}

#[derive(Debug, Deserialize)]
pub struct InstancesQuery {
    #[serde(default)]
    pub query: String,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRequest {
    pub a: String,
    pub b: String,
    pub score: f64,
}

#[derive(Debug, Deserialize)]
pub struct SuggestionsQuery {
    pub anchor: String,
    #[serde(default)]
    pub side: Side,
    pub k: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct KnnQuery {
    pub query: String,
    pub k: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct HistoryQuery {
    pub limit: Option<usize>,
}

async fn instances(
    State(state): State<SharedSession>,
    q: Result<Query<InstancesQuery>, QueryRejection>,
) -> impl IntoResponse {
    let q = params(q)?;
    let session = state.read().await;
    Ok::<_, ApiError>(Json(
        session.search(&q.query, q.limit.unwrap_or(DEFAULT_SEARCH_LIMIT)),
    ))
}

async fn post_label(
    State(state): State<SharedSession>,
    body: Result<Json<LabelRequest>, JsonRejection>,
) -> ApiResult<ModelSnapshot> {
    let Json(req) =
        body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.body_text()))?;
    let mut session = state.write().await;
    session
        .add_label(&req.a, &req.b, req.score, LabelSource::User)
        .map(|m| Json(m.snapshot()))
        .map_err(|e| ApiError::from_engine(e, StatusCode::BAD_REQUEST))
}

async fn suggestions(
    State(state): State<SharedSession>,
    q: Result<Query<SuggestionsQuery>, QueryRejection>,
) -> impl IntoResponse {
    let q = params(q)?;
    let session = state.read().await;
    session
        .suggest(&q.anchor, q.side, q.k)
        .map(Json)
        .map_err(|e| ApiError::from_engine(e, StatusCode::NOT_FOUND))
}

async fn nearest(
    State(state): State<SharedSession>,
    q: Result<Query<KnnQuery>, QueryRejection>,
) -> impl IntoResponse {
    let q = params(q)?;
    let session = state.read().await;
    session
        .knn(&q.query, q.k)
        .map(Json)
        .map_err(|e| ApiError::from_engine(e, StatusCode::NOT_FOUND))
}

async fn model(State(state): State<SharedSession>) -> Json<ModelSnapshot> {
    Json(state.read().await.model().snapshot())
}

async fn history(
    State(state): State<SharedSession>,
    q: Result<Query<HistoryQuery>, QueryRejection>,
) -> impl IntoResponse {
    let q = params(q)?;
    Ok::<_, ApiError>(Json(state.read().await.history(q.limit)))
}

pub fn router(state: SharedSession) -> Router {
    Router::new()
        .route("/instances", get(instances))
        .route("/labels", axum::routing::post(post_label))
        .route("/suggestions", get(suggestions))
        .route("/knn", get(nearest))
        .route("/model", get(model))
        .route("/history", get(history))
        .with_state(state)
}

pub fn shared(session: Session) -> SharedSession {
    Arc::new(RwLock::new(session))
}

pub async fn serve(session: Session, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(shared(session))).await
}
