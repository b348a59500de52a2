//! Read-only HTTP prediction service over a loaded bundle.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;

use hpslpred::bundle::BundleManifest;
use hpslpred::ensemble::EnsembleModel;
use hpslpred::pipeline::predict_fasta;

pub struct AppState {
    pub model: EnsembleModel,
    pub manifest: BundleManifest,
}

#[derive(Serialize)]
struct ChampionInfo<'a> {
    label: &'a str,
    kind: String,
    cv_precision: f64,
}

#[derive(Serialize)]
struct Health<'a> {
    status: &'static str,
    schema_id: &'a str,
    vocabulary: &'a [String],
    dimension: usize,
    macro_ap: f64,
    champions: Vec<ChampionInfo<'a>>,
}

fn bad_request(message: String) -> Response {
    (StatusCode::BAD_REQUEST, Json(serde_json::json!({ "error": message }))).into_response()
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    let m = &state.manifest;
    Json(Health {
        status: "ok",
        schema_id: &m.schema_id,
        vocabulary: &m.vocabulary.labels,
        dimension: m.selected_features.len(),
        macro_ap: m.macro_ap,
        champions: m
            .champions
            .iter()
            .map(|c| ChampionInfo { label: &c.label, kind: c.kind.to_string(), cv_precision: c.cv_precision })
            .collect(),
    })
    .into_response()
}

async fn predict(State(state): State<Arc<AppState>>, body: String) -> Response {
    if body.trim().is_empty() {
        return bad_request("empty request body; expected FASTA".into());
    }
    let result = tokio::task::spawn_blocking(move || predict_fasta(&state.model, &body)).await;
    match result {
        Ok(Ok(preds)) if preds.is_empty() => bad_request("no FASTA records found".into()),
        Ok(Ok(preds)) => Json(preds).into_response(),
        Ok(Err(e)) => bad_request(format!("malformed FASTA: {e}")),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, Json(serde_json::json!({ "error": e.to_string() }))).into_response(),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new().route("/health", get(health)).route("/predict", post(predict)).with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
