use serde::{Deserialize, Serialize};

use super::{bbox_of, FlatShape, Mesh};
use crate::error::{Error, Result};

/// Uniform scale about a center mapping a dataset into `[-1, 1]^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTransform {
    pub center: [f64; 3],
    pub scale: f64,
}

impl NormalizationTransform {
    pub fn identity() -> Self {
        Self {
            center: [0.0; 3],
            scale: 1.0,
        }
    }

    pub fn apply_point(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|k| (p[k] - self.center[k]) * self.scale)
    }

    pub fn invert_point(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|k| p[k] / self.scale + self.center[k])
    }

    pub fn apply(&self, mesh: &Mesh) -> Mesh {
        let mut out = mesh.clone();
        for v in out.vertices_mut() {
            *v = self.apply_point(*v);
        }
        out
    }

    pub fn invert(&self, mesh: &Mesh) -> Mesh {
        let mut out = mesh.clone();
        for v in out.vertices_mut() {
            *v = self.invert_point(*v);
        }
        out
    }

    pub fn apply_flat(&self, flat: &FlatShape) -> FlatShape {
        FlatShape(
            flat.0
                .iter()
                .enumerate()
                .map(|(i, &c)| (c - self.center[i % 3]) * self.scale)
                .collect(),
        )
    }
}

/// Fits one transform over every vertex of every mesh: the center is the
/// midpoint of the global bounding box and the scale is `2 / largest extent`.
pub fn fit_normalization(meshes: &[Mesh]) -> Result<NormalizationTransform> {
    let (lo, hi) = bbox_of(meshes.iter().flat_map(|m| m.vertices().iter()))
        .ok_or_else(|| Error::Degenerate("no vertices to normalize".into()))?;
    let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(Error::Degenerate(format!("bounding box has extent {extent}")));
    }
    let center = std::array::from_fn(|k| 0.5 * (lo[k] + hi[k]));
    let transform = NormalizationTransform {
        center,
        scale: 2.0 / extent,
    };
    Ok(transform)
}
