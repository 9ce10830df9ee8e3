//! Triangle meshes in a fixed shared topology.

mod normalize;
mod obj;
mod ply;
mod topology;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use normalize::{fit_normalization, NormalizationTransform};
pub use topology::{uv_layout_id, validate_topology, CountMismatch, FaceMismatch, Topology, TopologyReport};

/// On-disk mesh encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(Self::Obj),
            "ply" => Some(Self::Ply),
            _ => None,
        }
    }
}

/// A triangle mesh.
///
/// Face indices are always in `[0, n)` and every triangle references three
/// distinct vertices. When texture coordinates are present there is exactly
/// one per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[u32; 3]>,
    uvs: Option<Vec<[f64; 2]>>,
    id: String,
}

impl Mesh {
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[u32; 3]>, uvs: Option<Vec<[f64; 2]>>) -> Result<Self> {
        let n = vertices.len();
        for (fi, face) in faces.iter().enumerate() {
            if let Some(&bad) = face.iter().find(|&&i| i as usize >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::InvalidMesh(format!("face {fi} is degenerate: {face:?}")));
            }
        }
        if let Some(uvs) = &uvs {
            if uvs.len() != n {
                return Err(Error::InvalidMesh(format!(
                    "{} texture coordinates for {n} vertices",
                    uvs.len()
                )));
            }
        }
        Ok(Self {
            vertices,
            faces,
            uvs,
            id: String::new(),
        })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    /// Vertex positions may be edited freely; connectivity may not.
    pub fn vertices_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn uvs(&self) -> Option<&[[f64; 2]]> {
        self.uvs.as_deref()
    }

    pub fn set_uvs(&mut self, uvs: Option<Vec<[f64; 2]>>) -> Result<()> {
        if let Some(u) = &uvs {
            if u.len() != self.vertices.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.vertices.len(),
                    found: u.len(),
                });
            }
        }
        self.uvs = uvs;
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bbox(&self) -> Option<([f64; 3], [f64; 3])> {
        bbox_of(self.vertices.iter())
    }

    pub fn flatten(&self) -> FlatShape {
        FlatShape(self.vertices.iter().flatten().copied().collect())
    }

    /// Returns a copy whose vertices are replaced by `flat`.
    pub fn with_flat(&self, flat: &FlatShape) -> Result<Mesh> {
        let vertices = flat.to_vertices(self.vertices.len())?;
        Ok(Mesh {
            vertices,
            faces: self.faces.clone(),
            uvs: self.uvs.clone(),
            id: self.id.clone(),
        })
    }

    pub fn load(bytes: &[u8], format: MeshFormat) -> Result<Mesh> {
        match format {
            MeshFormat::Obj => obj::parse(bytes),
            MeshFormat::Ply => ply::parse(bytes),
        }
    }

    pub fn save(&self, format: MeshFormat) -> Vec<u8> {
        match format {
            MeshFormat::Obj => obj::write(self),
            MeshFormat::Ply => ply::write(self),
        }
    }

    /// Reads a mesh, inferring the format from the extension. Meshes
    /// without an embedded name take the file stem as their id.
    pub fn read_path(path: impl AsRef<Path>) -> Result<Mesh> {
        let path = path.as_ref();
        let format = MeshFormat::from_path(path)
            .ok_or_else(|| Error::InvalidMesh(format!("unknown mesh extension: {}", path.display())))?;
        let mesh = Mesh::load(&std::fs::read(path)?, format)?;
        if mesh.id.is_empty() {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            return Ok(mesh.with_id(stem));
        }
        Ok(mesh)
    }

    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let format = MeshFormat::from_path(path)
            .ok_or_else(|| Error::InvalidMesh(format!("unknown mesh extension: {}", path.display())))?;
        std::fs::write(path, self.save(format))?;
        Ok(())
    }
}

pub(crate) fn bbox_of<'a>(points: impl Iterator<Item = &'a [f64; 3]>) -> Option<([f64; 3], [f64; 3])> {
    let mut it = points.peekable();
    it.peek()?;
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in it {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    Some((lo, hi))
}

/// Vertex-major coordinate vector `(x1, y1, z1, x2, ...)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlatShape(pub Vec<f64>);

impl FlatShape {
    pub fn zeros(len: usize) -> Self {
        FlatShape(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Splits into `[x, y, z]` triples, checking the expected vertex count.
    pub fn to_vertices(&self, vertex_count: usize) -> Result<Vec<[f64; 3]>> {
        if !self.0.len().is_multiple_of(3) || self.0.len() != 3 * vertex_count {
            return Err(Error::DimensionMismatch {
                expected: 3 * vertex_count,
                found: self.0.len(),
            });
        }
        Ok(self.0.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    /// Rebuilds a mesh over `topology`.
    pub fn unflatten(&self, topology: &Topology) -> Result<Mesh> {
        let vertices = self.to_vertices(topology.vertex_count)?;
        Mesh::new(vertices, topology.faces.clone(), topology.uvs.clone())
    }
}
