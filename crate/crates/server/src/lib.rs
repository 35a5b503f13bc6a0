//! HTTP front end of the ingestion service.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/sessions` | register request, answered with 201 |
//! | POST | `/sessions/{id}/events` | event batch, `Authorization: Bearer <token>` |
//! | POST | `/sessions/{id}/ratings` | `{"ratings": [...]}`, same token |
//! | GET | `/health` | |

use std::future::Future;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use interest_core::model::SessionId;
use interest_store::ingest::{EventBatch, IngestError, Ingestor, RatingBatch, RegisterRequest};
use serde_json::json;
use tokio::net::TcpListener;

pub fn status_of(error: &IngestError) -> StatusCode {
    match error {
        IngestError::UnknownUser(_) | IngestError::InvalidToken => StatusCode::UNAUTHORIZED,
        IngestError::UnknownSession(_) => StatusCode::NOT_FOUND,
        IngestError::SessionConflict(_) => StatusCode::CONFLICT,
        IngestError::BatchTooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
        IngestError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
        IngestError::BadRequest(_) => StatusCode::BAD_REQUEST,
        IngestError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

struct ApiError(StatusCode, serde_json::Value);

impl From<IngestError> for ApiError {
    fn from(error: IngestError) -> Self {
        let status = status_of(&error);
        if status.is_server_error() {
            tracing::error!(%error, "ingestion failed");
        }
        let mut body = json!({ "error": error.to_string() });
        if let IngestError::Invalid(errors) = &error {
            body["errors"] = json!(errors);
        }
        ApiError(status, body)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        ApiError(StatusCode::BAD_REQUEST, json!({ "error": rejection.body_text() }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

fn bearer(headers: &HeaderMap) -> Option<String> {
    let value = headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    value.strip_prefix("Bearer ").map(|t| t.trim().to_owned())
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, IngestError> + Send + 'static,
) -> Result<T, ApiError> {
    match tokio::task::spawn_blocking(f).await {
        Ok(result) => result.map_err(ApiError::from),
        Err(join) => Err(ApiError(
            StatusCode::INTERNAL_SERVER_ERROR,
            json!({ "error": join.to_string() }),
        )),
    }
}

async fn register(
    State(ingestor): State<Ingestor>,
    body: Result<Json<RegisterRequest>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(request) = body?;
    let response = blocking(move || ingestor.register_session(&request)).await?;
    Ok((StatusCode::CREATED, Json(response)))
}

async fn events(
    State(ingestor): State<Ingestor>,
    Path(session): Path<String>,
    headers: HeaderMap,
    body: Result<Json<EventBatch>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(batch) = body?;
    let token = bearer(&headers);
    let session = SessionId::new(session);
    let outcome = blocking(move || ingestor.ingest_batch(&session, token.as_deref(), &batch)).await?;
    Ok(Json(outcome))
}

async fn ratings(
    State(ingestor): State<Ingestor>,
    Path(session): Path<String>,
    headers: HeaderMap,
    body: Result<Json<RatingBatch>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(batch) = body?;
    let token = bearer(&headers);
    let session = SessionId::new(session);
    let stored = blocking(move || ingestor.submit_ratings(&session, token.as_deref(), &batch.ratings)).await?;
    Ok(Json(json!({ "stored": stored })))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

pub fn router(ingestor: Ingestor) -> Router {
    Router::new()
        .route("/sessions", post(register))
        .route("/sessions/{id}/events", post(events))
        .route("/sessions/{id}/ratings", post(ratings))
        .route("/health", get(health))
        .with_state(ingestor)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    ingestor: Ingestor,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "ingestion service listening");
    }
    axum::serve(listener, router(ingestor))
        .with_graceful_shutdown(shutdown)
        .await
}
