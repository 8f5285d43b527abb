//! HTTP/1.1 + JSON transport for [`Engine`].
//!
//! | method | path            | body / query                         |
//! |--------|-----------------|--------------------------------------|
//! | POST   | `/v1/events`    | one wire-format detection event      |
//! | GET    | `/v1/lots`      |                                      |
//! | GET    | `/v1/recommend` | `lat`, `lon`, `alpha` (0.5), `k`     |
//! | POST   | `/v1/feedback`  | feedback record                      |

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tokio::net::TcpListener;

use super::{Engine, FeedbackOutcome, FeedbackRecord, IngestOutcome, RecommendOutcome, RejectCode};
use crate::recommender::DEFAULT_ALPHA;

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/v1/events", post(post_event))
        .route("/v1/lots", get(get_lots))
        .route("/v1/recommend", get(get_recommend))
        .route("/v1/feedback", post(post_feedback))
        .with_state(engine)
}

/// Serves until `shutdown` resolves, then writes a final checkpoint.
pub async fn serve(
    engine: Arc<Engine>,
    listener: TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(engine.clone());
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    tokio::task::spawn_blocking(move || engine.checkpoint())
        .await
        .map_err(std::io::Error::other)?;
    Ok(())
}

fn status_for(code: RejectCode) -> StatusCode {
    match code {
        RejectCode::SchemaViolation => StatusCode::BAD_REQUEST,
        RejectCode::RegistryMiss | RejectCode::UnknownCamera => StatusCode::UNPROCESSABLE_ENTITY,
        RejectCode::StaleFrame => StatusCode::CONFLICT,
        RejectCode::Backpressure | RejectCode::Storage => StatusCode::SERVICE_UNAVAILABLE,
    }
}

async fn post_event(State(engine): State<Arc<Engine>>, body: Bytes) -> Response {
    let raw = String::from_utf8_lossy(&body).into_owned();
    let outcome = match tokio::task::spawn_blocking(move || engine.ingest_raw(&raw)).await {
        Ok(o) => o,
        Err(e) => return (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    };
    let status = match &outcome {
        IngestOutcome::Accepted { .. } => StatusCode::OK,
        IngestOutcome::Rejected { code, .. } => status_for(*code),
    };
    (status, Json(outcome)).into_response()
}

async fn get_lots(State(engine): State<Arc<Engine>>) -> Response {
    Json(engine.lots()).into_response()
}

#[derive(Debug, Deserialize)]
struct RecommendQuery {
    lat: f64,
    lon: f64,
    alpha: Option<f64>,
    k: Option<usize>,
}

async fn get_recommend(State(engine): State<Arc<Engine>>, query: Result<Query<RecommendQuery>, axum::extract::rejection::QueryRejection>) -> Response {
    let q = match query {
        Ok(Query(q)) => q,
        Err(e) => {
            let body = RecommendOutcome::Invalid { reason: e.body_text() };
            return (StatusCode::BAD_REQUEST, Json(body)).into_response();
        }
    };
    let alpha = q.alpha.unwrap_or(DEFAULT_ALPHA);
    let outcome = match tokio::task::spawn_blocking(move || engine.recommend(q.lat, q.lon, alpha, q.k)).await {
        Ok(o) => o,
        Err(e) => return (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    };
    let status = match outcome {
        RecommendOutcome::Invalid { .. } => StatusCode::BAD_REQUEST,
        _ => StatusCode::OK,
    };
    (status, Json(outcome)).into_response()
}

#[derive(Debug, Deserialize)]
struct FeedbackBody {
    recommendation_id: String,
    accepted: bool,
    #[serde(default)]
    chosen_lot_id: Option<String>,
    #[serde(default)]
    submitted_at: Option<i64>,
}

async fn post_feedback(State(engine): State<Arc<Engine>>, body: Bytes) -> Response {
    let parsed: FeedbackBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => {
            let body = FeedbackOutcome::Rejected { reason: e.to_string() };
            return (StatusCode::BAD_REQUEST, Json(body)).into_response();
        }
    };
    let record = FeedbackRecord {
        recommendation_id: parsed.recommendation_id,
        accepted: parsed.accepted,
        chosen_lot_id: parsed.chosen_lot_id,
        submitted_at: parsed.submitted_at.unwrap_or(0),
    };
    let outcome = match tokio::task::spawn_blocking(move || engine.feedback(record)).await {
        Ok(o) => o,
        Err(e) => return (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    };
    let status = match outcome {
        FeedbackOutcome::Accepted { .. } => StatusCode::OK,
        FeedbackOutcome::Rejected { .. } => StatusCode::UNPROCESSABLE_ENTITY,
    };
    (status, Json(outcome)).into_response()
}
