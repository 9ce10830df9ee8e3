//! Position maps: vertex coordinates rasterized into UV space.
//!
//! Pixel `(col, row)` has its center at UV `((col + 0.5) / W, 1 - (row + 0.5) / H)`,
//! so row 0 is the top of the image and `v` points up. Positions are stored
//! per axis as `(p - min) / (max - min)` over the mesh bounding box.
//!
//! Triangles are filled with a top-left rule: a pixel center lying exactly
//! on an edge shared by two triangles belongs to exactly one of them, so
//! coverage does not depend on face order or on how rows are scheduled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::{uv_layout_id, Mesh};
use crate::pngio::{self, PngKind, RawImage};

/// Rows handled by one rasterization work unit.
const ROW_BLOCK: usize = 16;

/// Per-vertex cylindrical texture coordinates plus seam bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct UnwrapResult {
    pub uvs: Vec<[f64; 2]>,
    /// Vertices that appear shifted by `u + 1` in at least one wrapped face.
    pub seam_vertices: Vec<u32>,
    /// Faces whose `u` span exceeds one half; they are rasterized twice,
    /// at `u` and `u - 1`, and clipped to the image.
    pub wrapped_faces: Vec<bool>,
}

impl UnwrapResult {
    /// UV corners of face `fi`, with seam corners moved to `u + 1`.
    pub fn face_uvs(&self, face: [u32; 3], fi: usize) -> [[f64; 2]; 3] {
        let mut t = face.map(|i| self.uvs[i as usize]);
        if self.wrapped_faces[fi] {
            for c in &mut t {
                if c[0] < 0.5 {
                    c[0] += 1.0;
                }
            }
        }
        t
    }
}

/// `u = (atan2(z, x) + pi) / 2pi`, `v = (y - y_min) / (y_max - y_min)`.
pub fn cylindrical_unwrap(mesh: &Mesh) -> Result<UnwrapResult> {
    let (lo, hi) = mesh
        .bbox()
        .ok_or_else(|| Error::Degenerate("mesh has no vertices".into()))?;
    let extent = hi[1] - lo[1];
    if !(extent > 0.0) {
        return Err(Error::Degenerate(format!("vertical extent {extent}")));
    }
    let uvs: Vec<[f64; 2]> = mesh
        .vertices()
        .iter()
        .map(|p| {
            [
                (p[2].atan2(p[0]) + std::f64::consts::PI) / std::f64::consts::TAU,
                (p[1] - lo[1]) / extent,
            ]
        })
        .collect();
    Ok(UnwrapResult::from_uvs(uvs, mesh.faces()))
}

impl UnwrapResult {
    /// Treats existing per-vertex UVs as a cylindrical layout: faces whose
    /// `u` span exceeds one half are taken to cross the seam.
    pub fn from_uvs(uvs: Vec<[f64; 2]>, faces: &[[u32; 3]]) -> UnwrapResult {
        let mut seam = vec![false; uvs.len()];
        let wrapped_faces: Vec<bool> = faces
            .iter()
            .map(|f| {
                let us = f.map(|i| uvs[i as usize][0]);
                let span = us.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    - us.iter().copied().fold(f64::INFINITY, f64::min);
                let wrapped = span > 0.5;
                if wrapped {
                    for &i in f {
                        if uvs[i as usize][0] < 0.5 {
                            seam[i as usize] = true;
                        }
                    }
                }
                wrapped
            })
            .collect();
        UnwrapResult {
            seam_vertices: (0..uvs.len() as u32).filter(|&i| seam[i as usize]).collect(),
            uvs,
            wrapped_faces,
        }
    }
}

/// Where rasterization takes its texture coordinates from.
#[derive(Debug, Clone, Copy)]
pub enum UvSource<'a> {
    /// The mesh's own per-vertex UVs, used as-is.
    Mesh,
    /// A cylindrical unwrap; seam faces wrap around in `u`.
    Cylindrical(&'a UnwrapResult),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
}

impl AxisRange {
    pub fn encode(&self, x: f64) -> f64 {
        ((x - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
    }

    pub fn decode(&self, c: f64) -> f64 {
        self.min + c * (self.max - self.min)
    }
}

/// Bounding-box encoding; a flat axis gets a unit-wide range centred on it
/// so that `min < max` always holds.
pub fn bbox_encoding(mesh: &Mesh) -> Result<[AxisRange; 3]> {
    let (lo, hi) = mesh
        .bbox()
        .ok_or_else(|| Error::Degenerate("mesh has no vertices".into()))?;
    Ok(std::array::from_fn(|k| {
        if hi[k] > lo[k] {
            AxisRange { min: lo[k], max: hi[k] }
        } else {
            AxisRange {
                min: lo[k] - 0.5,
                max: lo[k] + 0.5,
            }
        }
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeMap {
    width: usize,
    height: usize,
    /// Row-major encoded positions; zero where invalid.
    data: Vec<[f64; 3]>,
    valid: Vec<bool>,
    encoding: [AxisRange; 3],
    uv_layout_id: String,
    wrap_u: bool,
}

/// Metadata stored next to the position and mask PNGs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeMapSidecar {
    pub resolution: [usize; 2],
    pub encoding: [AxisRange; 3],
    pub uv_layout_id: String,
    #[serde(default)]
    pub wrap_u: bool,
}

struct Triangle {
    pts: [[f64; 2]; 3],
    vals: [[f64; 3]; 3],
    area: f64,
    y_range: (f64, f64),
    x_range: (f64, f64),
}

/// Signed edge function computed with canonically ordered endpoints, so
/// that the two triangles sharing an edge see exactly opposite values.
fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let flip = (b[0], b[1]) < (a[0], a[1]);
    let (a, b) = if flip { (b, a) } else { (a, b) };
    let e = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    if flip {
        -e
    } else {
        e
    }
}

fn owns_boundary(a: [f64; 2], b: [f64; 2]) -> bool {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    dy > 0.0 || (dy == 0.0 && dx < 0.0)
}

impl Triangle {
    fn new(pts: [[f64; 2]; 3], vals: [[f64; 3]; 3]) -> Option<Self> {
        let area = edge(pts[0], pts[1], pts[2]);
        if area == 0.0 || !area.is_finite() {
            return None;
        }
        // orient so that the area is positive
        let (pts, vals) = if area < 0.0 {
            ([pts[0], pts[2], pts[1]], [vals[0], vals[2], vals[1]])
        } else {
            (pts, vals)
        };
        let xs = pts.map(|p| p[0]);
        let ys = pts.map(|p| p[1]);
        Some(Triangle {
            pts,
            vals,
            area: area.abs(),
            x_range: (
                xs.iter().copied().fold(f64::INFINITY, f64::min),
                xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
            y_range: (
                ys.iter().copied().fold(f64::INFINITY, f64::min),
                ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
        })
    }

    /// Barycentric weights of `p`, or `None` if the top-left rule excludes it.
    fn weights(&self, p: [f64; 2]) -> Option<[f64; 3]> {
        let [a, b, c] = self.pts;
        let w = [edge(b, c, p), edge(c, a, p), edge(a, b, p)];
        let edges = [(b, c), (c, a), (a, b)];
        for (wi, (s, t)) in w.iter().zip(edges) {
            if *wi < 0.0 || (*wi == 0.0 && !owns_boundary(s, t)) {
                return None;
            }
        }
        Some(w.map(|x| x / self.area))
    }
}

impl ShapeMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn encoding(&self) -> &[AxisRange; 3] {
        &self.encoding
    }

    pub fn uv_layout_id(&self) -> &str {
        &self.uv_layout_id
    }

    pub fn wrap_u(&self) -> bool {
        self.wrap_u
    }

    /// Encoded value at `(col, row)`, `None` if the pixel is not covered.
    pub fn pixel(&self, col: usize, row: usize) -> Option<[f64; 3]> {
        let i = row * self.width + col;
        self.valid[i].then(|| self.data[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn pixel_center_uv(&self, col: usize, row: usize) -> [f64; 2] {
        [
            (col as f64 + 0.5) / self.width as f64,
            1.0 - (row as f64 + 0.5) / self.height as f64,
        ]
    }

    pub fn decode(&self, c: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|k| self.encoding[k].decode(c[k]))
    }

    pub fn encode(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|k| self.encoding[k].encode(p[k]))
    }

    /// Width of one 16-bit quantization step along each axis, in model units.
    pub fn quantization_step(&self) -> [f64; 3] {
        self.encoding.map(|r| (r.max - r.min) / 65535.0)
    }

    /// Position-map PNG (16-bit RGB).
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut data = Vec::with_capacity(self.data.len() * 6);
        for (px, &ok) in self.data.iter().zip(&self.valid) {
            for c in px {
                let q = if ok { (c * 65535.0).round() as u16 } else { 0 };
                data.extend_from_slice(&q.to_be_bytes());
            }
        }
        pngio::encode(&RawImage {
            width: self.width as u32,
            height: self.height as u32,
            kind: PngKind::Rgb16,
            data,
        })
    }

    /// Validity mask PNG (8-bit gray, 255 = valid).
    pub fn mask_png(&self) -> Result<Vec<u8>> {
        pngio::encode(&RawImage {
            width: self.width as u32,
            height: self.height as u32,
            kind: PngKind::Gray8,
            data: self.valid.iter().map(|&v| if v { 255 } else { 0 }).collect(),
        })
    }

    pub fn sidecar(&self) -> ShapeMapSidecar {
        ShapeMapSidecar {
            resolution: [self.width, self.height],
            encoding: self.encoding,
            uv_layout_id: self.uv_layout_id.clone(),
            wrap_u: self.wrap_u,
        }
    }

    /// Rebuilds a (16-bit quantized) map from its three persisted parts.
    pub fn from_files(position_png: &[u8], mask_png: &[u8], sidecar: &ShapeMapSidecar) -> Result<Self> {
        let pos = pngio::decode(position_png)?;
        let mask = pngio::decode(mask_png)?;
        let [w, h] = sidecar.resolution;
        if pos.kind != PngKind::Rgb16 || mask.kind != PngKind::Gray8 {
            return Err(Error::Image("expected 16-bit RGB position and 8-bit gray mask".into()));
        }
        if (pos.width as usize, pos.height as usize) != (w, h) || (mask.width as usize, mask.height as usize) != (w, h)
        {
            return Err(Error::Image("image size disagrees with sidecar".into()));
        }
        let valid: Vec<bool> = mask.data.iter().map(|&m| m > 127).collect();
        let data = pos
            .data
            .chunks_exact(6)
            .zip(&valid)
            .map(|(c, &ok)| {
                if !ok {
                    return [0.0; 3];
                }
                std::array::from_fn(|k| u16::from_be_bytes([c[2 * k], c[2 * k + 1]]) as f64 / 65535.0)
            })
            .collect();
        Ok(ShapeMap {
            width: w,
            height: h,
            data,
            valid,
            encoding: sidecar.encoding,
            uv_layout_id: sidecar.uv_layout_id.clone(),
            wrap_u: sidecar.wrap_u,
        })
    }
}

/// Rasterizes vertex positions over the chosen UV layout at
/// `resolution x resolution`.
pub fn rasterize_shape_map(mesh: &Mesh, uvs: UvSource<'_>, resolution: usize, exec: Execution) -> Result<ShapeMap> {
    if resolution < 4 {
        return Err(Error::OutOfRange(format!("resolution {resolution} < 4")));
    }
    let (w, h) = (resolution, resolution);
    let encoding = bbox_encoding(mesh)?;
    let enc = |p: [f64; 3]| -> [f64; 3] { std::array::from_fn(|k| encoding[k].encode(p[k])) };
    let to_px = |uv: [f64; 2]| [uv[0] * w as f64, (1.0 - uv[1]) * h as f64];

    let mut tris = Vec::with_capacity(mesh.face_count());
    let (layout_id, wrap_u) = match uvs {
        UvSource::Mesh => {
            let uv = mesh
                .uvs()
                .ok_or_else(|| Error::InvalidMesh("mesh has no texture coordinates".into()))?;
            for f in mesh.faces() {
                let pts = f.map(|i| to_px(uv[i as usize]));
                let vals = f.map(|i| enc(mesh.vertices()[i as usize]));
                tris.extend(Triangle::new(pts, vals));
            }
            (uv_layout_id(Some(uv)), false)
        }
        UvSource::Cylindrical(unwrap) => {
            if unwrap.uvs.len() != mesh.vertex_count() || unwrap.wrapped_faces.len() != mesh.face_count() {
                return Err(Error::DimensionMismatch {
                    expected: mesh.vertex_count(),
                    found: unwrap.uvs.len(),
                });
            }
            for (fi, f) in mesh.faces().iter().enumerate() {
                let pts = unwrap.face_uvs(*f, fi).map(to_px);
                let vals = f.map(|i| enc(mesh.vertices()[i as usize]));
                tris.extend(Triangle::new(pts, vals));
                if unwrap.wrapped_faces[fi] {
                    let shifted = pts.map(|p| [p[0] - w as f64, p[1]]);
                    tris.extend(Triangle::new(shifted, vals));
                }
            }
            (format!("cyl-{}", uv_layout_id(Some(&unwrap.uvs))), true)
        }
    };

    let mut pixels: Vec<Option<[f64; 3]>> = vec![None; w * h];
    exec.for_each_chunk_mut(&mut pixels, ROW_BLOCK * w, |block, chunk| {
        let row0 = block * ROW_BLOCK;
        let rows = chunk.len() / w;
        let (y_lo, y_hi) = (row0 as f64, (row0 + rows) as f64);
        for t in &tris {
            if t.y_range.1 < y_lo || t.y_range.0 > y_hi {
                continue;
            }
            let r_start = ((t.y_range.0 - 0.5).ceil().max(row0 as f64)) as usize;
            let r_end = ((t.y_range.1 - 0.5).floor().min((row0 + rows - 1) as f64)) as isize;
            let c_start = (t.x_range.0 - 0.5).ceil().max(0.0) as usize;
            let c_end = (t.x_range.1 - 0.5).floor().min((w - 1) as f64) as isize;
            if r_end < r_start as isize || c_end < c_start as isize {
                continue;
            }
            for r in r_start..=r_end as usize {
                let py = r as f64 + 0.5;
                for c in c_start..=c_end as usize {
                    if let Some(bw) = t.weights([c as f64 + 0.5, py]) {
                        let v = std::array::from_fn(|k| {
                            (bw[0] * t.vals[0][k] + bw[1] * t.vals[1][k] + bw[2] * t.vals[2][k]).clamp(0.0, 1.0)
                        });
                        chunk[(r - row0) * w + c] = Some(v);
                    }
                }
            }
        }
    });

    Ok(ShapeMap {
        width: w,
        height: h,
        valid: pixels.iter().map(Option::is_some).collect(),
        data: pixels.into_iter().map(|p| p.unwrap_or([0.0; 3])).collect(),
        encoding,
        uv_layout_id: layout_id,
        wrap_u,
    })
}

/// Bilinear lookup over valid neighbours, decoded to model units.
pub fn sample_shape_map(map: &ShapeMap, uv: [f64; 2]) -> Result<[f64; 3]> {
    let x = uv[0] * map.width as f64 - 0.5;
    let y = (1.0 - uv[1]) * map.height as f64 - 0.5;
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    let (w, h) = (map.width as isize, map.height as isize);

    let mut acc = [0.0; 3];
    let mut wsum = 0.0;
    let mut fallback = [0.0; 3];
    let mut nvalid = 0usize;
    for (dx, dy, wt) in [
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ] {
        let row = y0 + dy;
        let mut col = x0 + dx;
        if map.wrap_u {
            col = col.rem_euclid(w);
        }
        if row < 0 || row >= h || col < 0 || col >= w {
            continue;
        }
        let Some(v) = map.pixel(col as usize, row as usize) else {
            continue;
        };
        nvalid += 1;
        for k in 0..3 {
            acc[k] += wt * v[k];
            fallback[k] += v[k];
        }
        wsum += wt;
    }
    if nvalid == 0 {
        return Err(Error::InvalidNeighborhood { u: uv[0], v: uv[1] });
    }
    let c = if wsum > 0.0 {
        acc.map(|a| a / wsum)
    } else {
        fallback.map(|a| a / nvalid as f64)
    };
    Ok(map.decode(c))
}

/// Samples the map at each texture coordinate.
pub fn reconstruct_vertices(map: &ShapeMap, uvs: &[[f64; 2]]) -> Result<Vec<[f64; 3]>> {
    uvs.iter().map(|&uv| sample_shape_map(map, uv)).collect()
}

/// Largest Euclidean distance between corresponding points.
pub fn max_vertex_error(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests;
