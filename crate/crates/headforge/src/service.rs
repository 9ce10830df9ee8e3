//! JSON-over-HTTP front end. Large artifacts travel as blob refs.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path as UrlPath, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

use headforge_core::color::SemanticColorMap;
use headforge_core::mesh::Mesh;
use headforge_core::metrics::{DiagonalMode, MetricsConfig, MetricsReport};
use headforge_core::model::{AttributeLabel, AttributeValue, Cohort, Keep, SampleRequest};

use crate::error::{ApiError, ApiResult};
use crate::ops;
use crate::store::{BlobStore, ModelStore};

const MAX_BODY: usize = 1 << 30;

#[derive(Debug)]
pub struct AppState {
    pub root: PathBuf,
    pub blobs: BlobStore,
    pub models: ModelStore,
}

impl AppState {
    pub fn open(root: &Path) -> std::io::Result<Arc<Self>> {
        Ok(Arc::new(AppState {
            root: root.to_owned(),
            blobs: BlobStore::open(root)?,
            models: ModelStore::open(root)?,
        }))
    }
}

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/blobs", post(put_blob))
        .route("/v1/blobs/{reference}", get(get_blob))
        .route("/v1/models", post(create_model))
        .route("/v1/models/{id}", get(model_info))
        .route("/v1/models/{id}/sample", post(sample))
        .route("/v1/models/{id}/interpolate", post(interpolate))
        .route("/v1/recolor", post(recolor))
        .route("/v1/metrics", post(metrics))
        .layer(DefaultBodyLimit::max(MAX_BODY))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

pub async fn serve(root: &Path, addr: SocketAddr) -> std::io::Result<()> {
    let state = AppState::open(root)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("headforge listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

/// An empty body reads as `{}`.
fn parse_json<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    let body = if body.iter().all(u8::is_ascii_whitespace) {
        b"{}" as &[u8]
    } else {
        body
    };
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BlobRef {
    #[serde(rename = "ref")]
    pub reference: String,
}

async fn put_blob(State(s): Shared, body: Bytes) -> ApiResult<(StatusCode, Json<BlobRef>)> {
    let reference = blocking(move || s.blobs.put(&body)).await?;
    Ok((StatusCode::CREATED, Json(BlobRef { reference })))
}

async fn get_blob(State(s): Shared, UrlPath(reference): UrlPath<String>) -> ApiResult<Response> {
    let bytes = blocking(move || s.blobs.get(&reference)).await?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetRequest {
    dataset_dir: PathBuf,
    #[serde(default)]
    keep: Keep,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelCreated {
    pub model_id: String,
    pub num_components: usize,
    pub n_meshes: usize,
    pub topology_hash: String,
}

async fn read_multipart(mut mp: Multipart) -> ApiResult<(Vec<(Mesh, AttributeLabel)>, Keep)> {
    let mut meshes: Vec<(String, Vec<u8>)> = Vec::new();
    let mut labels = None;
    let mut keep = Keep::default();
    while let Some(field) = mp
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(format!("multipart: {e}")))?
    {
        let name = field.name().unwrap_or_default().to_owned();
        let file_name = field.file_name().map(str::to_owned);
        let data = field
            .bytes()
            .await
            .map_err(|e| ApiError::bad_request(format!("multipart: {e}")))?;
        match name.as_str() {
            "mesh" | "meshes" => {
                let file_name = file_name.ok_or_else(|| ApiError::bad_request("mesh part without a file name"))?;
                let id = Path::new(&file_name)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or(file_name);
                meshes.push((id, data.to_vec()));
            }
            "labels" => labels = Some(data),
            "keep" => keep = parse_json(&data)?,
            other => return Err(ApiError::bad_request(format!("unexpected multipart field {other:?}"))),
        }
    }
    let labels = labels.ok_or_else(|| ApiError::bad_request("missing labels part"))?;
    let labels = ops::parse_labels_csv(&labels)?;
    let training = labels
        .into_iter()
        .map(|(id, label)| {
            let (_, bytes) = meshes
                .iter()
                .find(|(m, _)| *m == id)
                .ok_or_else(|| ApiError::bad_request(format!("no mesh uploaded for id {id:?}")))?;
            Ok((ops::load_mesh_bytes(bytes, &id)?, label))
        })
        .collect::<ApiResult<Vec<_>>>()?;
    Ok((training, keep))
}

async fn create_model(State(s): Shared, req: Request) -> ApiResult<(StatusCode, Json<ModelCreated>)> {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let (training, keep) = if is_multipart {
        let mp = Multipart::from_request(req, &s)
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        read_multipart(mp).await?
    } else {
        let body = Bytes::from_request(req, &s)
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        let r: DatasetRequest = parse_json(&body)?;
        let dir = s.root.join(&r.dataset_dir);
        let training = blocking(move || {
            if !dir.is_dir() {
                return Err(ApiError::bad_request(format!(
                    "dataset_dir {} is not a directory",
                    dir.display()
                )));
            }
            Ok(ops::load_dataset_dir(&dir)?)
        })
        .await?;
        (training, r.keep)
    };
    let created = blocking(move || {
        let (model, metadata) = ops::fit_model(&training, keep)?;
        let n_meshes = training.len();
        let entry = s.models.register(model, metadata)?;
        Ok(ModelCreated {
            model_id: entry.model_id.clone(),
            num_components: entry.model.num_components(),
            n_meshes,
            topology_hash: entry.model.topology().hash(),
        })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(created)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CohortSummary {
    pub cohort: String,
    pub support: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelInfo {
    pub model_id: String,
    pub num_components: usize,
    pub vertex_count: usize,
    pub scales: Vec<f64>,
    pub cohorts: Vec<CohortSummary>,
    pub n_meshes: usize,
    pub created_at: String,
}

async fn model_info(State(s): Shared, UrlPath(id): UrlPath<String>) -> ApiResult<Json<ModelInfo>> {
    let m = blocking(move || s.models.get(&id)).await?;
    Ok(Json(ModelInfo {
        model_id: m.model_id.clone(),
        num_components: m.model.num_components(),
        vertex_count: m.model.topology().vertex_count,
        scales: m.model.scales().to_vec(),
        cohorts: m
            .model
            .cohorts()
            .iter()
            .map(|c| CohortSummary {
                cohort: c.cohort.to_string(),
                support: c.support,
            })
            .collect(),
        n_meshes: m.metadata.labels.len(),
        created_at: m.metadata.created_at.clone(),
    }))
}

/// A cohort as `{"gender": .., "age": .., "race": ..}` or `"male/old/asian"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CohortInput {
    Text(String),
    Fields(Cohort),
}

impl CohortInput {
    fn resolve(self) -> ApiResult<Cohort> {
        match self {
            CohortInput::Fields(c) => Ok(c),
            CohortInput::Text(t) => Ok(t.parse()?),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleBody {
    #[serde(default)]
    seed: u64,
    weights: Option<Vec<f64>>,
    cohort: Option<CohortInput>,
    resolution: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SampleResponse {
    pub mesh: String,
    pub shape_map: String,
    pub shape_map_mask: String,
    pub shape_map_sidecar: String,
}

async fn sample(State(s): Shared, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Json<SampleResponse>> {
    let b: SampleBody = parse_json(&body)?;
    let out = blocking(move || {
        let m = s.models.get(&id)?;
        let req = SampleRequest {
            seed: b.seed,
            weights: b.weights,
            cohort: b.cohort.map(CohortInput::resolve).transpose()?,
        };
        let art = ops::sample_artifacts(&m.model, &req, b.resolution.unwrap_or(ops::DEFAULT_RESOLUTION))?;
        Ok(SampleResponse {
            mesh: s.blobs.put(&art.obj)?,
            shape_map: s.blobs.put(&art.shape_map.position_png)?,
            shape_map_mask: s.blobs.put(&art.shape_map.mask_png)?,
            shape_map_sidecar: s.blobs.put(&art.shape_map.sidecar_json)?,
        })
    })
    .await?;
    Ok(Json(out))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterpolateBody {
    from_label: AttributeValue,
    to_label: AttributeValue,
    alpha: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MeshResponse {
    pub mesh: String,
}

async fn interpolate(State(s): Shared, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Json<MeshResponse>> {
    let b: InterpolateBody = parse_json(&body)?;
    let mesh = blocking(move || {
        let m = s.models.get(&id)?;
        let mesh = ops::interpolate_mesh(&m.model, b.from_label, b.to_label, b.alpha)?;
        s.blobs.put(&ops::obj_bytes(&mesh))
    })
    .await?;
    Ok(Json(MeshResponse { mesh }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecolorBody {
    albedo: String,
    mask: Option<String>,
    target: SemanticColorMap,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AlbedoResponse {
    pub albedo: String,
}

async fn recolor(State(s): Shared, body: Bytes) -> ApiResult<Json<AlbedoResponse>> {
    let b: RecolorBody = parse_json(&body)?;
    let albedo = blocking(move || {
        let albedo = s.blobs.get(&b.albedo)?;
        let mask = b.mask.as_deref().map(|r| s.blobs.get(r)).transpose()?;
        let out = ops::recolor_png(&albedo, mask.as_deref(), &b.target)?;
        s.blobs.put(&out)
    })
    .await?;
    Ok(Json(AlbedoResponse { albedo }))
}

/// A mesh set: a list of mesh blob refs, or the ref of a manifest blob
/// `{"meshes": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetRef {
    Manifest(String),
    Refs(Vec<String>),
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SetManifest {
    pub meshes: Vec<String>,
}

fn load_set(blobs: &BlobStore, set: &SetRef) -> ApiResult<Vec<Mesh>> {
    let refs = match set {
        SetRef::Refs(r) => r.clone(),
        SetRef::Manifest(r) => {
            let m: SetManifest = serde_json::from_slice(&blobs.get(r)?)
                .map_err(|e| ApiError::bad_request(format!("manifest {r}: {e}")))?;
            m.meshes
        }
    };
    if refs.is_empty() {
        return Err(ApiError::bad_request("empty mesh set"));
    }
    refs.iter()
        .map(|r| Ok(ops::load_mesh_bytes(&blobs.get(r)?, r)?))
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsBody {
    generated: SetRef,
    real: SetRef,
    #[serde(default)]
    mode: DiagonalMode,
    tau: Option<f64>,
}

async fn metrics(State(s): Shared, body: Bytes) -> ApiResult<Json<MetricsReport>> {
    let b: MetricsBody = parse_json(&body)?;
    let report = blocking(move || {
        let gen = load_set(&s.blobs, &b.generated)?;
        let real = load_set(&s.blobs, &b.real)?;
        let cfg = MetricsConfig {
            tau: b.tau,
            diagonal_mode: b.mode,
            ..MetricsConfig::default()
        };
        Ok(ops::metrics_report(&gen, &real, &cfg)?)
    })
    .await?;
    Ok(Json(report))
}
