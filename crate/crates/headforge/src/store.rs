//! On-disk state under the data root: content-addressed blobs and model
//! files.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use sha2::{Digest, Sha256};

use headforge_core::model::ShapeModel;
use headforge_core::modelfile::{read_model, write_model, ModelMetadata};

use crate::error::{ApiError, ApiResult};

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

/// Blobs are named by the hex SHA-256 of their content.
#[derive(Debug, Clone)]
pub struct BlobStore {
    dir: PathBuf,
}

impl BlobStore {
    pub fn open(root: &Path) -> std::io::Result<Self> {
        let dir = root.join("blobs");
        std::fs::create_dir_all(&dir)?;
        Ok(BlobStore { dir })
    }

    pub fn reference(bytes: &[u8]) -> String {
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path(&self, reference: &str) -> ApiResult<PathBuf> {
        let ok = reference.len() == 64 && reference.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'));
        if !ok {
            return Err(ApiError::bad_request(format!("malformed blob ref {reference:?}")));
        }
        Ok(self.dir.join(reference))
    }

    pub fn put(&self, bytes: &[u8]) -> ApiResult<String> {
        let reference = Self::reference(bytes);
        let path = self.path(&reference)?;
        if !path.exists() {
            write_atomic(&path, bytes)?;
        }
        Ok(reference)
    }

    pub fn get(&self, reference: &str) -> ApiResult<Vec<u8>> {
        let path = self.path(reference)?;
        match std::fs::read(&path) {
            Ok(b) => Ok(b),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Err(ApiError::not_found(format!("no blob {reference}")))
            }
            Err(e) => Err(e.into()),
        }
    }
}

/// A registered model. Never mutated after registration.
#[derive(Debug)]
pub struct SessionModel {
    pub model_id: String,
    pub model: ShapeModel,
    pub metadata: ModelMetadata,
}

/// Models keyed by id, cached in memory and persisted as model files.
/// Registration takes the write lock; lookups share the read lock and fall
/// back to disk, so a restarted service serves previously registered ids.
#[derive(Debug)]
pub struct ModelStore {
    dir: PathBuf,
    cache: RwLock<HashMap<String, Arc<SessionModel>>>,
}

impl ModelStore {
    pub fn open(root: &Path) -> std::io::Result<Self> {
        let dir = root.join("models");
        std::fs::create_dir_all(&dir)?;
        Ok(ModelStore {
            dir,
            cache: RwLock::new(HashMap::new()),
        })
    }

    fn path(&self, id: &str) -> ApiResult<PathBuf> {
        uuid::Uuid::parse_str(id).map_err(|_| ApiError::not_found(format!("no model {id}")))?;
        Ok(self.dir.join(format!("{id}.hfsm")))
    }

    pub fn register(&self, model: ShapeModel, metadata: ModelMetadata) -> ApiResult<Arc<SessionModel>> {
        let model_id = uuid::Uuid::new_v4().to_string();
        write_atomic(&self.path(&model_id)?, &write_model(&model, &metadata))?;
        let entry = Arc::new(SessionModel {
            model_id: model_id.clone(),
            model,
            metadata,
        });
        self.cache
            .write()
            .expect("model cache lock")
            .insert(model_id, entry.clone());
        Ok(entry)
    }

    pub fn get(&self, id: &str) -> ApiResult<Arc<SessionModel>> {
        if let Some(m) = self.cache.read().expect("model cache lock").get(id) {
            return Ok(m.clone());
        }
        let path = self.path(id)?;
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(ApiError::not_found(format!("no model {id}")))
            }
            Err(e) => return Err(e.into()),
        };
        let (model, metadata) = read_model(&bytes)?;
        let entry = Arc::new(SessionModel {
            model_id: id.to_owned(),
            model,
            metadata,
        });
        let mut cache = self.cache.write().expect("model cache lock");
        Ok(cache.entry(id.to_owned()).or_insert(entry).clone())
    }
}
