//! Binary little-endian PLY (`float` x/y/z, optional `float` s/t, `int`
//! face index lists).

use super::Mesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

fn header_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::InvalidMesh(format!("PLY body truncated at byte {}", self.pos)));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn scalar(&mut self, ty: Scalar) -> Result<f64> {
        Ok(ty.read(self.take(ty.size())?))
    }
}

pub(super) fn parse(bytes: &[u8]) -> Result<Mesh> {
    const END: &[u8] = b"end_header";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| header_error(1, "missing end_header"))?;
    let mut body_start = end + END.len();
    if bytes.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if bytes.get(body_start) == Some(&b'\n') {
        body_start += 1;
    }
    let header = std::str::from_utf8(&bytes[..end]).map_err(|e| header_error(1, e.to_string()))?;

    let mut elements: Vec<Element> = Vec::new();
    let mut id = String::new();
    for (i, raw) in header.lines().enumerate() {
        let line = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["ply"] if line == 1 => {}
            _ if line == 1 => return Err(header_error(1, "not a PLY file")),
            ["format", "binary_little_endian", "1.0"] => {}
            ["format", other, ..] => return Err(header_error(line, format!("unsupported PLY format {other}"))),
            ["comment", "id", rest @ ..] => id = rest.join(" "),
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| header_error(line, "invalid element count"))?,
                properties: Vec::new(),
            }),
            ["property", "list", count, item, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| header_error(line, "property before element"))?;
                el.properties.push(Property::List {
                    name: name.to_string(),
                    count: Scalar::parse(count).ok_or_else(|| header_error(line, "unknown list count type"))?,
                    item: Scalar::parse(item).ok_or_else(|| header_error(line, "unknown list item type"))?,
                });
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| header_error(line, "property before element"))?;
                el.properties.push(Property::Scalar {
                    name: name.to_string(),
                    ty: Scalar::parse(ty).ok_or_else(|| header_error(line, format!("unknown type {ty}")))?,
                });
            }
            _ => return Err(header_error(line, format!("unrecognized header line {raw:?}"))),
        }
    }

    let mut cur = Cursor {
        data: bytes,
        pos: body_start,
    };
    let mut vertices = Vec::new();
    let mut uvs: Vec<[f64; 2]> = Vec::new();
    let mut has_uv = false;
    let mut faces = Vec::new();

    for el in &elements {
        match el.name.as_str() {
            "vertex" => {
                let slot = |name: &str| match name {
                    "x" => Some(0),
                    "y" => Some(1),
                    "z" => Some(2),
                    "s" | "u" | "texture_u" => Some(3),
                    "t" | "v" | "texture_v" => Some(4),
                    _ => None,
                };
                has_uv = el
                    .properties
                    .iter()
                    .any(|p| matches!(p, Property::Scalar { name, .. } if slot(name) == Some(3)));
                for _ in 0..el.count {
                    let mut rec = [0.0f64; 5];
                    for p in &el.properties {
                        match p {
                            Property::Scalar { name, ty } => {
                                let v = cur.scalar(*ty)?;
                                if let Some(s) = slot(name) {
                                    rec[s] = v;
                                }
                            }
                            Property::List { count, item, .. } => {
                                let k = cur.scalar(*count)? as usize;
                                cur.take(k * item.size())?;
                            }
                        }
                    }
                    vertices.push([rec[0], rec[1], rec[2]]);
                    uvs.push([rec[3], rec[4]]);
                }
            }
            "face" => {
                for _ in 0..el.count {
                    for p in &el.properties {
                        match p {
                            Property::List { name, count, item }
                                if name == "vertex_indices" || name == "vertex_index" =>
                            {
                                let k = cur.scalar(*count)? as usize;
                                let mut poly = Vec::with_capacity(k);
                                for _ in 0..k {
                                    let idx = cur.scalar(*item)?;
                                    if idx < 0.0 {
                                        return Err(Error::InvalidMesh(format!("negative face index {idx}")));
                                    }
                                    poly.push(idx as u32);
                                }
                                if k < 3 {
                                    return Err(Error::InvalidMesh("face with fewer than three corners".into()));
                                }
                                for j in 1..k - 1 {
                                    faces.push([poly[0], poly[j], poly[j + 1]]);
                                }
                            }
                            Property::List { count, item, .. } => {
                                let k = cur.scalar(*count)? as usize;
                                cur.take(k * item.size())?;
                            }
                            Property::Scalar { ty, .. } => {
                                cur.scalar(*ty)?;
                            }
                        }
                    }
                }
            }
            _ => {
                for _ in 0..el.count {
                    for p in &el.properties {
                        match p {
                            Property::Scalar { ty, .. } => {
                                cur.take(ty.size())?;
                            }
                            Property::List { count, item, .. } => {
                                let k = cur.scalar(*count)? as usize;
                                cur.take(k * item.size())?;
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(Mesh::new(vertices, faces, has_uv.then_some(uvs))?.with_id(id))
}

pub(super) fn write(mesh: &Mesh) -> Vec<u8> {
    let mut out = Vec::new();
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    if !mesh.id().is_empty() {
        header.push_str(&format!("comment id {}\n", mesh.id()));
    }
    header.push_str(&format!("element vertex {}\n", mesh.vertex_count()));
    header.push_str("property float x\nproperty float y\nproperty float z\n");
    if mesh.uvs().is_some() {
        header.push_str("property float s\nproperty float t\n");
    }
    header.push_str(&format!("element face {}\n", mesh.face_count()));
    header.push_str("property list uchar int vertex_indices\nend_header\n");
    out.extend_from_slice(header.as_bytes());
    for (i, v) in mesh.vertices().iter().enumerate() {
        for c in v {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        if let Some(uvs) = mesh.uvs() {
            for c in uvs[i] {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
    }
    for f in mesh.faces() {
        out.push(3);
        for i in f {
            out.extend_from_slice(&(*i as i32).to_le_bytes());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshFormat;

    #[test]
    fn binary_round_trip() {
        let m = Mesh::new(
            vec![[0.1, 0.2, 0.3], [1.0, 0.0, -0.5], [0.0, 1.0, 0.25], [1.0, 1.0, 1.0]],
            vec![[0, 1, 2], [1, 3, 2]],
            Some(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
        )
        .unwrap();
        let back = Mesh::load(&m.save(MeshFormat::Ply), MeshFormat::Ply).unwrap();
        assert_eq!(back.faces(), m.faces());
        assert_eq!(back.uvs(), m.uvs());
        for (a, b) in back.vertices().iter().zip(m.vertices()) {
            for k in 0..3 {
                // float32 storage
                assert!((a[k] - b[k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn quads_are_fanned() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 4\n\
property float x\nproperty float y\nproperty float z\nelement face 1\n\
property list uchar int vertex_indices\nend_header\n"
            .to_vec();
        for v in [[0f32, 0., 0.], [1., 0., 0.], [1., 1., 0.], [0., 1., 0.]] {
            for c in v {
                bytes.extend_from_slice(&c.to_le_bytes());
            }
        }
        bytes.push(4);
        for i in [0i32, 1, 2, 3] {
            bytes.extend_from_slice(&i.to_le_bytes());
        }
        let m = Mesh::load(&bytes, MeshFormat::Ply).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn ascii_is_rejected_with_line() {
        let err = Mesh::load(b"ply\nformat ascii 1.0\nend_header\n", MeshFormat::Ply).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn truncated_body_errors() {
        let bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\n\
property float x\nproperty float y\nproperty float z\nend_header\n\0\0\0\0";
        assert!(Mesh::load(bytes, MeshFormat::Ply).is_err());
    }
}
