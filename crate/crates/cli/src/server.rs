//! JSON-over-HTTP search service.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use looksearch::index::FORMAT_VERSION;
use looksearch::{IndexShardSet, SearchResult};
use serde::Serialize;
use serde_json::json;

use crate::config::SearchDefaults;
use crate::request::{RequestError, SearchRequest};

pub struct AppState {
    pub index: IndexShardSet,
    pub defaults: SearchDefaults,
}

#[derive(Debug, Serialize)]
pub struct SearchResponse {
    pub results: Vec<SearchResult>,
    pub took_ms: f64,
}

#[derive(Debug, Serialize)]
struct ShardStats<'a> {
    category: &'a str,
    num_docs: usize,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/search", post(search_handler))
        .route("/v1/health", get(health_handler))
        .fallback(|| async { error(StatusCode::NOT_FOUND, "no such route".into()) })
        .with_state(state)
}

fn error(status: StatusCode, message: String) -> Response {
    (status, Json(json!({ "error": message }))).into_response()
}

async fn search_handler(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let start = Instant::now();
    let request: SearchRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed request body: {e}")),
    };
    match request.execute(&state.index, &state.defaults) {
        Ok(results) => Json(SearchResponse {
            results,
            took_ms: start.elapsed().as_secs_f64() * 1e3,
        })
        .into_response(),
        Err(RequestError::Invalid(m)) => error(StatusCode::BAD_REQUEST, m),
        Err(RequestError::Engine(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn health_handler(State(state): State<Arc<AppState>>) -> Response {
    let shards: Vec<ShardStats> = state
        .index
        .shards()
        .map(|s| ShardStats {
            category: s.category(),
            num_docs: s.len(),
        })
        .collect();
    Json(json!({
        "status": "ok",
        "format_version": FORMAT_VERSION,
        "num_shards": shards.len(),
        "num_docs": state.index.num_docs(),
        "shards": shards,
    }))
    .into_response()
}

/// Serves until Ctrl-C. `on_bound` receives the bound address (useful with port 0).
pub async fn serve(state: AppState, addr: SocketAddr, on_bound: impl FnOnce(SocketAddr)) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
