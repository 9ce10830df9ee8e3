//! Binary model files.
//!
//! ```text
//! b"HFSM1" | u64 LE header length | JSON header | data section
//! ```
//!
//! The header holds the scalar metadata and, for each array, its element
//! type, byte offset into the data section and element count. Arrays are
//! little-endian `f64` (mean, components, cohort deltas, UVs) or `u32`
//! (faces). The topology hash in the header is recomputed on read.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{FlatShape, NormalizationTransform, Topology};
use crate::model::{AttributeLabel, Cohort, DemographicOffset, ShapeModel};

pub const MAGIC: &[u8; 5] = b"HFSM1";

/// Information carried alongside a model that the model itself does not use.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelMetadata {
    /// Labels of the training meshes, in input order.
    pub labels: Vec<AttributeLabel>,
    /// Free-form creation timestamp.
    pub created_at: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Dtype {
    F64,
    U32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Section {
    dtype: Dtype,
    offset: u64,
    count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CohortEntry {
    cohort: Cohort,
    support: usize,
    delta: Section,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format: String,
    topology_hash: String,
    n: usize,
    num_components: usize,
    scales: Vec<f64>,
    normalization: NormalizationTransform,
    uv_layout_id: String,
    mean: Section,
    components: Section,
    faces: Section,
    uvs: Option<Section>,
    cohorts: Vec<CohortEntry>,
    metadata: ModelMetadata,
}

#[derive(Default)]
struct Writer {
    data: Vec<u8>,
}

impl Writer {
    fn f64s(&mut self, xs: &[f64]) -> Section {
        let offset = self.data.len() as u64;
        for x in xs {
            self.data.extend_from_slice(&x.to_le_bytes());
        }
        Section {
            dtype: Dtype::F64,
            offset,
            count: xs.len() as u64,
        }
    }

    fn u32s(&mut self, xs: impl Iterator<Item = u32>) -> Section {
        let offset = self.data.len() as u64;
        let mut count = 0;
        for x in xs {
            self.data.extend_from_slice(&x.to_le_bytes());
            count += 1;
        }
        Section {
            dtype: Dtype::U32,
            offset,
            count,
        }
    }
}

pub fn write_model(model: &ShapeModel, metadata: &ModelMetadata) -> Vec<u8> {
    let mut w = Writer::default();
    let mean = w.f64s(&model.mean.0);
    let components = w.f64s(&model.components);
    let faces = w.u32s(model.topology.faces.iter().flatten().copied());
    let uvs = model
        .topology
        .uvs
        .as_ref()
        .map(|uv| w.f64s(&uv.iter().flatten().copied().collect::<Vec<_>>()));
    let cohorts = model
        .cohorts
        .iter()
        .map(|c| CohortEntry {
            cohort: c.cohort,
            support: c.support,
            delta: w.f64s(&c.delta.0),
        })
        .collect();
    let header = Header {
        format: String::from_utf8_lossy(MAGIC).into_owned(),
        topology_hash: model.topology.hash(),
        n: model.topology.vertex_count,
        num_components: model.scales.len(),
        scales: model.scales.clone(),
        normalization: model.normalization,
        uv_layout_id: model.topology.uv_layout_id.clone(),
        mean,
        components,
        faces,
        uvs,
        cohorts,
        metadata: metadata.clone(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(MAGIC.len() + 8 + json.len() + w.data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&w.data);
    out
}

fn bad(msg: impl Into<String>) -> Error {
    Error::ModelFile(msg.into())
}

struct Reader<'a> {
    data: &'a [u8],
}

impl Reader<'_> {
    fn bytes(&self, s: &Section, dtype: Dtype, expected: usize, what: &str) -> Result<&[u8]> {
        if s.dtype != dtype {
            return Err(bad(format!("{what}: expected {dtype:?} data")));
        }
        if s.count != expected as u64 {
            return Err(bad(format!("{what}: {} elements, expected {expected}", s.count)));
        }
        let width = match dtype {
            Dtype::F64 => 8,
            Dtype::U32 => 4,
        };
        let start = usize::try_from(s.offset).map_err(|_| bad(format!("{what}: offset overflow")))?;
        let end = start
            .checked_add(expected * width)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| bad(format!("{what}: section runs past end of file")))?;
        Ok(&self.data[start..end])
    }

    fn f64s(&self, s: &Section, expected: usize, what: &str) -> Result<Vec<f64>> {
        Ok(self
            .bytes(s, Dtype::F64, expected, what)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn u32s(&self, s: &Section, expected: usize, what: &str) -> Result<Vec<u32>> {
        Ok(self
            .bytes(s, Dtype::U32, expected, what)?
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn read_model(bytes: &[u8]) -> Result<(ShapeModel, ModelMetadata)> {
    if bytes.len() < MAGIC.len() + 8 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(bad("missing HFSM1 magic"));
    }
    let len_end = MAGIC.len() + 8;
    let header_len = u64::from_le_bytes(bytes[MAGIC.len()..len_end].try_into().unwrap());
    let header_end = usize::try_from(header_len)
        .ok()
        .and_then(|l| len_end.checked_add(l))
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| bad("header length exceeds file size"))?;
    let header: Header =
        serde_json::from_slice(&bytes[len_end..header_end]).map_err(|e| bad(format!("header: {e}")))?;
    if header.format.as_bytes() != MAGIC {
        return Err(bad(format!("unsupported format {:?}", header.format)));
    }
    let r = Reader {
        data: &bytes[header_end..],
    };
    let dim = 3 * header.n;
    let k = header.num_components;
    if header.scales.len() != k {
        return Err(bad(format!("{} scales for {k} components", header.scales.len())));
    }
    let mean = r.f64s(&header.mean, dim, "mean")?;
    let components = r.f64s(&header.components, k * dim, "components")?;
    let face_count = usize::try_from(header.faces.count / 3).map_err(|_| bad("face count overflow"))?;
    let flat_faces = r.u32s(&header.faces, 3 * face_count, "faces")?;
    let faces: Vec<[u32; 3]> = flat_faces.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    if faces.iter().flatten().any(|&i| i as usize >= header.n) {
        return Err(bad("face index out of range"));
    }
    let uvs = match &header.uvs {
        None => None,
        Some(s) => Some(
            r.f64s(s, 2 * header.n, "uvs")?
                .chunks_exact(2)
                .map(|c| [c[0], c[1]])
                .collect::<Vec<_>>(),
        ),
    };
    let topology = Topology {
        vertex_count: header.n,
        faces,
        uvs,
        uv_layout_id: header.uv_layout_id,
    };
    let hash = topology.hash();
    if hash != header.topology_hash {
        return Err(bad(format!(
            "topology hash mismatch: header {}, data {hash}",
            header.topology_hash
        )));
    }
    let cohorts = header
        .cohorts
        .iter()
        .map(|c| {
            Ok(DemographicOffset {
                cohort: c.cohort,
                support: c.support,
                delta: FlatShape(r.f64s(&c.delta, dim, "cohort delta")?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let model = ShapeModel {
        mean: FlatShape(mean),
        components,
        scales: header.scales,
        topology,
        normalization: header.normalization,
        cohorts,
    };
    Ok((model, header.metadata))
}

pub fn save_model(path: impl AsRef<Path>, model: &ShapeModel, metadata: &ModelMetadata) -> Result<()> {
    std::fs::write(path, write_model(model, metadata))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(ShapeModel, ModelMetadata)> {
    read_model(&std::fs::read(path)?)
}
