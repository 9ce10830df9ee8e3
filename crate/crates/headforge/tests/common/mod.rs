#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use headforge::ops;
use headforge::service::{router, AppState};
use headforge_core::synth::{synthesize_cohort_dataset, trace_default_mask, DatasetSpec};
use headforge_core::Execution;

pub const HOLDOUT: usize = 10;

/// A default synthetic dataset written once per test binary:
/// `<dir>/train` (94 heads) and `<dir>/holdout` (10 heads).
pub fn dataset() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("headforge-ds-{}", std::process::id()));
        let spec = DatasetSpec::default();
        let samples = synthesize_cohort_dataset(&spec, Execution::Parallel).unwrap();
        let mask = trace_default_mask(spec.albedo_resolution);
        let (train, test) = samples.split_at(samples.len() - HOLDOUT);
        ops::write_dataset(&dir.join("train"), train, &mask).unwrap();
        ops::write_dataset(&dir.join("holdout"), test, &mask).unwrap();
        dir
    })
}

pub fn app(root: &Path) -> (Router, Arc<AppState>) {
    let state = AppState::open(root).unwrap();
    (router(state.clone()), state)
}

pub async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

pub async fn post_json(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(Method::POST)
        .uri(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (status, bytes) = send(app, req).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

pub async fn blob(app: &Router, reference: &Value) -> Vec<u8> {
    let (status, bytes) = get(app, &format!("/v1/blobs/{}", reference.as_str().unwrap())).await;
    assert_eq!(status, StatusCode::OK);
    bytes
}

pub async fn put_blob(app: &Router, bytes: Vec<u8>) -> String {
    let req = Request::post("/v1/blobs").body(Body::from(bytes)).unwrap();
    let (status, body) = send(app, req).await;
    assert_eq!(status, StatusCode::CREATED);
    let v: Value = serde_json::from_slice(&body).unwrap();
    v["ref"].as_str().unwrap().to_owned()
}

pub struct Part {
    pub name: &'static str,
    pub file_name: Option<String>,
    pub data: Vec<u8>,
}

pub fn multipart(parts: &[Part]) -> Request<Body> {
    const BOUNDARY: &str = "headforge-test-boundary";
    let mut body = Vec::new();
    for p in parts {
        body.extend_from_slice(format!("--{BOUNDARY}\r\n").as_bytes());
        let disposition = match &p.file_name {
            Some(f) => format!(
                "Content-Disposition: form-data; name=\"{}\"; filename=\"{f}\"\r\n",
                p.name
            ),
            None => format!("Content-Disposition: form-data; name=\"{}\"\r\n", p.name),
        };
        body.extend_from_slice(disposition.as_bytes());
        body.extend_from_slice(b"Content-Type: application/octet-stream\r\n\r\n");
        body.extend_from_slice(&p.data);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    Request::post("/v1/models")
        .header(
            header::CONTENT_TYPE,
            format!("multipart/form-data; boundary={BOUNDARY}"),
        )
        .body(Body::from(body))
        .unwrap()
}

/// Multipart parts for every mesh listed in `dir/labels.csv`, plus the labels.
pub fn dataset_parts(dir: &Path) -> Vec<Part> {
    let labels = std::fs::read(dir.join("labels.csv")).unwrap();
    let mut parts: Vec<Part> = ops::parse_labels_csv(&labels)
        .unwrap()
        .into_iter()
        .map(|(id, _)| Part {
            name: "meshes",
            data: std::fs::read(dir.join(format!("{id}.obj"))).unwrap(),
            file_name: Some(format!("{id}.obj")),
        })
        .collect();
    parts.push(Part {
        name: "labels",
        file_name: None,
        data: labels,
    });
    parts
}
