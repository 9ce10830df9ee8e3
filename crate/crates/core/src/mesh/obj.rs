//! Wavefront OBJ: `v`, `vt`, `f` and `o` records, 1-based indices.

use std::fmt::Write as _;

use super::Mesh;
use crate::error::{Error, Result};

struct Corner {
    vertex: u32,
    texcoord: Option<u32>,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn floats<'a>(tokens: impl Iterator<Item = &'a str>, want: usize, line: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = tokens
        .take(want)
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| parse_error(line, format!("invalid number {t:?}")))
        })
        .collect::<Result<_>>()?;
    if values.len() < want {
        return Err(parse_error(line, format!("expected {want} numbers")));
    }
    Ok(values)
}

/// Resolves a 1-based (or negative, relative) OBJ index against `count`.
fn resolve(token: &str, count: usize, line: usize) -> Result<u32> {
    let raw: i64 = token
        .parse()
        .map_err(|_| parse_error(line, format!("invalid index {token:?}")))?;
    let idx = match raw {
        0 => return Err(parse_error(line, "index 0 is invalid in 1-based OBJ indexing")),
        r if r > 0 => r - 1,
        r => count as i64 + r,
    };
    if idx < 0 || idx as usize >= count {
        return Err(parse_error(line, format!("index {raw} out of range ({count} defined)")));
    }
    Ok(idx as u32)
}

pub(super) fn parse(bytes: &[u8]) -> Result<Mesh> {
    let text = std::str::from_utf8(bytes).map_err(|e| parse_error(0, e.to_string()))?;
    let mut vertices = Vec::new();
    let mut texcoords: Vec<[f64; 2]> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut corner_uv: Vec<Option<u32>> = Vec::new();
    let mut saw_uv_ref = false;
    let mut name = String::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        match tag {
            "v" => {
                let c = floats(tokens, 3, line)?;
                vertices.push([c[0], c[1], c[2]]);
            }
            "vt" => {
                let c = floats(tokens, 2, line)?;
                texcoords.push([c[0], c[1]]);
            }
            "f" => {
                let corners = tokens
                    .map(|t| {
                        let mut parts = t.split('/');
                        let vertex = resolve(parts.next().unwrap_or(""), vertices.len(), line)?;
                        let texcoord = match parts.next() {
                            Some(s) if !s.is_empty() => Some(resolve(s, texcoords.len(), line)?),
                            _ => None,
                        };
                        Ok(Corner { vertex, texcoord })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if corners.len() < 3 {
                    return Err(parse_error(line, "face needs at least three corners"));
                }
                let with_uv = corners.iter().filter(|c| c.texcoord.is_some()).count();
                if with_uv != 0 && with_uv != corners.len() {
                    return Err(parse_error(line, "face mixes corners with and without vt"));
                }
                saw_uv_ref |= with_uv != 0;
                // Fan from corner 0; quads split along the 0-2 diagonal.
                for k in 1..corners.len() - 1 {
                    let tri = [&corners[0], &corners[k], &corners[k + 1]];
                    let face = tri.map(|c| c.vertex);
                    if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                        return Err(parse_error(line, "degenerate face"));
                    }
                    faces.push(face);
                    for c in tri {
                        if corner_uv.len() <= c.vertex as usize {
                            corner_uv.resize(vertices.len(), None);
                        }
                        if let Some(t) = c.texcoord {
                            match corner_uv[c.vertex as usize] {
                                Some(prev) if texcoords[prev as usize] != texcoords[t as usize] => {
                                    return Err(parse_error(
                                        line,
                                        format!("vertex {} has more than one texture coordinate", c.vertex + 1),
                                    ));
                                }
                                _ => corner_uv[c.vertex as usize] = Some(t),
                            }
                        }
                    }
                }
            }
            "o" => name = tokens.collect::<Vec<_>>().join(" "),
            // normals, groups, smoothing and materials carry nothing we keep
            _ => {}
        }
    }

    let n = vertices.len();
    let uvs = if saw_uv_ref {
        corner_uv.resize(n, None);
        let resolved: Option<Vec<[f64; 2]>> = corner_uv
            .iter()
            .enumerate()
            .map(|(i, t)| match t {
                Some(t) => Some(texcoords[*t as usize]),
                None if texcoords.len() == n => Some(texcoords[i]),
                None => None,
            })
            .collect();
        Some(resolved.ok_or_else(|| parse_error(0, "some vertices have no texture coordinate"))?)
    } else if !texcoords.is_empty() {
        if texcoords.len() != n {
            return Err(parse_error(
                0,
                format!("{} vt records for {n} vertices and no face references", texcoords.len()),
            ));
        }
        Some(texcoords)
    } else {
        None
    };

    Ok(Mesh::new(vertices, faces, uvs)?.with_id(name))
}

pub(super) fn write(mesh: &Mesh) -> Vec<u8> {
    // `{}` on f64 prints the shortest string that parses back to the same
    // value, so the text round trip is lossless.
    let mut out = String::with_capacity(mesh.vertex_count() * 48 + mesh.face_count() * 24);
    if !mesh.id().is_empty() {
        let _ = writeln!(out, "o {}", mesh.id());
    }
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
    }
    if let Some(uvs) = mesh.uvs() {
        for t in uvs {
            let _ = writeln!(out, "vt {} {}", t[0], t[1]);
        }
        for f in mesh.faces() {
            let [a, b, c] = f.map(|i| i + 1);
            let _ = writeln!(out, "f {a}/{a} {b}/{b} {c}/{c}");
        }
    } else {
        for f in mesh.faces() {
            let [a, b, c] = f.map(|i| i + 1);
            let _ = writeln!(out, "f {a} {b} {c}");
        }
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshFormat;
    use proptest::prelude::*;

    #[test]
    fn smallest_valid_mesh() {
        let m = Mesh::load(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", MeshFormat::Obj).unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.face_count(), 1);
        assert!(m.uvs().is_none());
    }

    #[test]
    fn texcoords_become_per_vertex_uvs() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0.1 0.2\nvt 0.3 0.4\nvt 0.5 0.6\nf 1/3 2/2 3/1\n";
        let m = Mesh::load(src.as_bytes(), MeshFormat::Obj).unwrap();
        let uvs = m.uvs().unwrap();
        assert_eq!(uvs.len(), 3);
        assert_eq!(uvs[0], [0.5, 0.6]);
        assert_eq!(uvs[2], [0.1, 0.2]);
    }

    #[test]
    fn zero_index_reports_line() {
        let err = Mesh::load(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n", MeshFormat::Obj).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quads_split_on_zero_two_diagonal() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let m = Mesh::load(src.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn negative_indices_and_slash_forms() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf -3//1 -2//1 -1//1\n";
        let m = Mesh::load(src.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn conflicting_texcoords_are_rejected() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvt 1 1\n\
                   f 1/1 2/2 3/3\nf 2/4 4/4 3/3\n";
        assert!(Mesh::load(src.as_bytes(), MeshFormat::Obj).is_err());
    }

    #[test]
    fn no_vt_lines_without_uvs() {
        let m = Mesh::load(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", MeshFormat::Obj).unwrap();
        let text = String::from_utf8(m.save(MeshFormat::Obj)).unwrap();
        assert!(!text.contains("vt"));
        assert_eq!(text, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    }

    #[test]
    fn decimal_precision_survives() {
        let m = Mesh::new(
            vec![[0.1, 0.2, 0.3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap();
        let text = String::from_utf8(m.save(MeshFormat::Obj)).unwrap();
        let first = text.lines().next().unwrap();
        let parsed: Vec<f64> = first[2..].split(' ').map(|t| t.parse().unwrap()).collect();
        // shortest round-trip formatting: at least 7 significant digits of accuracy
        assert_eq!(parsed, vec![0.1, 0.2, 0.3]);
        let back = Mesh::load(text.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(back.vertices(), m.vertices());
    }

    #[test]
    fn id_survives_as_object_name() {
        let m = Mesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]], None)
            .unwrap()
            .with_id("head_007");
        let back = Mesh::load(&m.save(MeshFormat::Obj), MeshFormat::Obj).unwrap();
        assert_eq!(back.id(), "head_007");
    }

    fn random_mesh() -> impl Strategy<Value = Mesh> {
        (3usize..40, any::<bool>()).prop_flat_map(|(n, with_uv)| {
            (
                proptest::collection::vec((-1e4f64..1e4, -1e4f64..1e4, -1e4f64..1e4), n),
                proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), n),
                proptest::collection::vec((0..n as u32, 0..n as u32, 0..n as u32), 1..60),
                Just(with_uv),
            )
                .prop_map(|(v, t, f, with_uv)| {
                    let faces: Vec<[u32; 3]> = f
                        .into_iter()
                        .filter(|(a, b, c)| a != b && b != c && a != c)
                        .map(|(a, b, c)| [a, b, c])
                        .collect();
                    let uvs = with_uv.then(|| t.into_iter().map(|(u, v)| [u, v]).collect());
                    Mesh::new(v.into_iter().map(|(x, y, z)| [x, y, z]).collect(), faces, uvs).unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn save_load_round_trip(m in random_mesh()) {
            let back = Mesh::load(&m.save(MeshFormat::Obj), MeshFormat::Obj).unwrap();
            prop_assert_eq!(back.faces(), m.faces());
            prop_assert_eq!(back.uvs(), m.uvs());
            for (a, b) in back.vertices().iter().zip(m.vertices()) {
                for k in 0..3 {
                    prop_assert!((a[k] - b[k]).abs() <= 1e-6);
                }
            }
        }
    }
}
