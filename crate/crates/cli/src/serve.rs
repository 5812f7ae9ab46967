//! JSON-over-HTTP front end: `POST /score`, `POST /rank`, `GET /health`.
//!
//! The model and comment store are loaded once and shared read-only, so
//! identical requests always get identical responses.

// Request helpers short-circuit with a ready-made error response.
#![allow(clippy::result_large_err)]

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use serde_json::{json, Map, Value};
use soc_core::rank::{rank_tokens, CommentStore, Window};
use soc_core::SocError;

use crate::error::{CliError, CliResult};
use crate::AnyPredictor;

pub struct AppState {
    pub predictor: AnyPredictor,
    pub store: CommentStore,
}

pub fn build_router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/score", post(score))
        .route("/rank", post(rank))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn bad_request(message: impl Into<String>) -> Response {
    error(StatusCode::BAD_REQUEST, message)
}

fn object(body: &[u8]) -> Result<Map<String, Value>, Response> {
    match serde_json::from_slice::<Value>(body) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(bad_request("request body must be a JSON object")),
        Err(e) => Err(bad_request(format!("malformed JSON: {e}"))),
    }
}

fn string_field<'a>(map: &'a Map<String, Value>, key: &str) -> Result<&'a str, Response> {
    match map.get(key) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(bad_request(format!("field {key:?} must be a string"))),
        None => Err(bad_request(format!("missing field {key:?}"))),
    }
}

fn date_field(map: &Map<String, Value>, key: &str) -> Result<NaiveDate, Response> {
    let raw = string_field(map, key)?;
    raw.parse()
        .map_err(|e| bad_request(format!("field {key:?}: {raw:?} is not a YYYY-MM-DD date ({e})")))
}

fn core_error(e: SocError) -> Response {
    if e.is_input_error() {
        bad_request(e.to_string())
    } else {
        error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn score(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let map = match object(&body) {
        Ok(m) => m,
        Err(r) => return r,
    };
    let text = match string_field(&map, "text") {
        Ok(t) => t,
        Err(r) => return r,
    };
    match state.predictor.predict(text) {
        Ok(p) => Json(json!({ "score": p.scalar, "bucket": p.label })).into_response(),
        Err(e) => core_error(e),
    }
}

async fn rank(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let map = match object(&body) {
        Ok(m) => m,
        Err(r) => return r,
    };
    let window = match (date_field(&map, "from"), date_field(&map, "to")) {
        (Ok(from), Ok(to)) => match Window::new(from, to) {
            Ok(w) => w,
            Err(e) => return core_error(e),
        },
        (Err(r), _) | (_, Err(r)) => return r,
    };
    let ranked = rank_tokens(&state.store, &window, |r| {
        state.predictor.predict(&r.text).map(|p| p.scalar)
    });
    match ranked {
        Ok(entries) => {
            let rows: Vec<Value> = entries
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    json!({
                        "rank": i + 1,
                        "token": e.token,
                        "M": e.count,
                        "W": e.weight,
                        "score_orig": e.score_orig,
                        "score_adj": e.score_adj,
                    })
                })
                .collect();
            Json(Value::Array(rows)).into_response()
        }
        Err(e) => core_error(e),
    }
}

/// Binds `addr` and serves until the process is stopped. A busy or invalid
/// address is a startup error.
pub fn serve_blocking(predictor: AnyPredictor, store: CommentStore, addr: &str) -> CliResult<()> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(format!("starting runtime: {e}")))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|source| CliError::Startup {
                addr: addr.to_string(),
                source,
            })?;
        let local = listener
            .local_addr()
            .map_err(|e| CliError::Internal(e.to_string()))?;
        eprintln!("listening on http://{local}");
        let app = build_router(Arc::new(AppState { predictor, store }));
        axum::serve(listener, app)
            .await
            .map_err(|e| CliError::Internal(format!("server stopped: {e}")))
    })
}
