mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;

use hpslpred::bundle::load_bundle;
use hpslpred::config::PipelineConfig;
use hpslpred::pipeline;
use hpslpred_cli::service::{router, AppState};

fn state() -> (tempfile::TempDir, Arc<AppState>) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::load(&common::small_project(dir.path())).unwrap();
    let out = dir.path().join("out");
    pipeline::run(&cfg, &out, None, None).unwrap();
    let (manifest, model) = load_bundle(&out.join(pipeline::BUNDLE_DIR)).unwrap();
    (dir, Arc::new(AppState { model, manifest }))
}

async fn call(state: &Arc<AppState>, req: Request<Body>) -> (StatusCode, serde_json::Value) {
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn post(body: &str) -> Request<Body> {
    Request::post("/predict").header("content-type", "text/plain").body(Body::from(body.to_string())).unwrap()
}

#[tokio::test]
async fn http_contract() {
    let (_dir, state) = state();
    let labels = state.manifest.vocabulary.labels.clone();

    let (status, json) = call(&state, Request::get("/health").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json["schema_id"], state.manifest.schema_id.as_str());
    assert_eq!(json["vocabulary"], serde_json::json!(labels));

    let fasta = ">p1\nACDEFGHIKLMNPQRSTVWYACDEFGHIKLMNPQRSTVWY\n>p2\nMKKLLAAGGSSTTVVWWYYMKKLLAAGG\n";
    let (status, json) = call(&state, post(fasta)).await;
    assert_eq!(status, StatusCode::OK);
    let arr = json.as_array().unwrap();
    assert_eq!(arr.len(), 2);
    assert_eq!(arr[0]["id"], "p1");
    assert!(!arr[0]["labels"].as_array().unwrap().is_empty());
    assert_eq!(arr[0]["scores"].as_object().unwrap().len(), labels.len());

    // same answer as direct prediction
    let direct = pipeline::predict_fasta(&state.model, fasta).unwrap();
    assert_eq!(json, serde_json::to_value(&direct).unwrap());

    let (status, json) = call(&state, post(">ok\nACDEFGHIKLMNPQRSTVWYACDEFGHIKLMNPQRSTVWY\n>tiny\nACDE\n")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(json[0].get("error").is_none());
    assert!(json[1]["error"].as_str().unwrap().contains("short"), "{json}");

    let (status, _) = call(&state, post("")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, json) = call(&state, post("ACDEFGHIK without a header\n")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(json["error"].as_str().unwrap().contains("FASTA"));
}
