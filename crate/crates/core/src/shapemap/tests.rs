use super::*;
use crate::rng::NormalSource;
use proptest::prelude::*;

/// One triangle whose UV footprint covers the unit square; its centroid sits
/// on the center of pixel (1, 1) at resolution 4.
fn big_triangle() -> Mesh {
    Mesh::new(
        vec![[0.0, 0.0, 0.0], [3.0, 1.0, -2.0], [1.0, 4.0, 2.0]],
        vec![[0, 1, 2]],
        Some(vec![[-1.0, -1.0], [3.0, -1.0], [-0.875, 3.875]]),
    )
    .unwrap()
}

/// `k x k` planar grid whose positions are an affine function of UV.
fn affine_grid(k: usize) -> Mesh {
    let f = |u: f64, v: f64| [2.0 * u + 0.3 * v - 1.0, -0.5 * u + 1.5 * v, 0.25 * u - 0.75 * v + 0.1];
    let mut verts = Vec::new();
    let mut uvs = Vec::new();
    for j in 0..=k {
        for i in 0..=k {
            let (u, v) = (i as f64 / k as f64, j as f64 / k as f64);
            verts.push(f(u, v));
            uvs.push([u, v]);
        }
    }
    let id = |i: usize, j: usize| (j * (k + 1) + i) as u32;
    let mut faces = Vec::new();
    for j in 0..k {
        for i in 0..k {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new(verts, faces, Some(uvs)).unwrap()
}

#[test]
fn centroid_pixel_holds_mean_position() {
    let m = big_triangle();
    let map = rasterize_shape_map(&m, UvSource::Mesh, 4, Execution::Sequential).unwrap();
    assert_eq!(map.valid_count(), 16);
    assert_eq!(map.pixel_center_uv(1, 1), [0.375, 0.625]);
    let got = map.decode(map.pixel(1, 1).unwrap());
    let v = m.vertices();
    for k in 0..3 {
        let expected = (v[0][k] + v[1][k] + v[2][k]) / 3.0;
        assert!((got[k] - expected).abs() < 1e-12, "axis {k}: {} vs {expected}", got[k]);
    }
}

#[test]
fn uncovered_pixels_are_invalid_and_zero() {
    let m = Mesh::new(
        vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 1.0]],
        vec![[0, 1, 2]],
        Some(vec![[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]]),
    )
    .unwrap();
    let map = rasterize_shape_map(&m, UvSource::Mesh, 8, Execution::Sequential).unwrap();
    // top-right pixel is far outside the lower-left triangle
    assert_eq!(map.pixel(7, 0), None);
    assert_eq!(map.data[7], [0.0; 3]);
    assert!(map.pixel(0, 7).is_some());
}

#[test]
fn resolution_and_uv_preconditions() {
    let m = big_triangle();
    assert!(matches!(
        rasterize_shape_map(&m, UvSource::Mesh, 3, Execution::Sequential),
        Err(Error::OutOfRange(_))
    ));
    let mut no_uv = m.clone();
    no_uv.set_uvs(None).unwrap();
    assert!(rasterize_shape_map(&no_uv, UvSource::Mesh, 8, Execution::Sequential).is_err());
}

#[test]
fn shared_edges_are_filled_exactly_once() {
    // Every pixel of the unit square is covered by exactly one of the grid
    // triangles; count hits by rasterizing each triangle separately.
    let m = affine_grid(8);
    let w = 32;
    let mut hits = vec![0u32; w * w];
    for f in m.faces() {
        let single = Mesh::new(m.vertices().to_vec(), vec![*f], m.uvs().map(|u| u.to_vec())).unwrap();
        let map = rasterize_shape_map(&single, UvSource::Mesh, w, Execution::Sequential).unwrap();
        for (h, v) in hits.iter_mut().zip(&map.valid) {
            *h += *v as u32;
        }
    }
    assert!(
        hits.iter().all(|&h| h == 1),
        "coverage counts {:?}",
        hits.iter().filter(|&&h| h != 1).count()
    );
}

#[test]
fn rasterizer_matches_direct_barycentric_evaluation() {
    let m = affine_grid(6);
    let map = rasterize_shape_map(&m, UvSource::Mesh, 64, Execution::Sequential).unwrap();
    let step = map.quantization_step();
    let mut src = NormalSource::new(99);
    let (verts, uvs) = (m.vertices(), m.uvs().unwrap());
    for _ in 0..1000 {
        // random interior point of a random face, by barycentric weights
        let f = m.faces()[(src.uniform() * m.face_count() as f64) as usize];
        let (mut a, mut b) = (src.uniform(), src.uniform());
        if a + b > 1.0 {
            a = 1.0 - a;
            b = 1.0 - b;
        }
        let w = [1.0 - a - b, a, b];
        let uv: [f64; 2] = std::array::from_fn(|k| (0..3).map(|i| w[i] * uvs[f[i] as usize][k]).sum());
        if uv.iter().any(|&c| !(1.0 / 64.0..=1.0 - 1.0 / 64.0).contains(&c)) {
            continue; // bilinear neighbourhood would leave the covered square
        }
        let direct: [f64; 3] = std::array::from_fn(|k| (0..3).map(|i| w[i] * verts[f[i] as usize][k]).sum());
        let got = sample_shape_map(&map, uv).unwrap();
        for k in 0..3 {
            assert!((got[k] - direct[k]).abs() <= step[k], "{got:?} vs {direct:?}");
        }
    }
}

#[test]
fn sampling_at_pixel_center_and_between_equal_pixels() {
    let m = affine_grid(4);
    let map = rasterize_shape_map(&m, UvSource::Mesh, 16, Execution::Sequential).unwrap();
    let uv = map.pixel_center_uv(5, 9);
    assert_eq!(
        sample_shape_map(&map, uv).unwrap(),
        map.decode(map.pixel(5, 9).unwrap())
    );

    // constant-position mesh: every sample decodes to that position
    let mut flat = m.clone();
    for v in flat.vertices_mut() {
        *v = [0.25, -0.5, 2.0];
    }
    let cmap = rasterize_shape_map(&flat, UvSource::Mesh, 16, Execution::Sequential).unwrap();
    for uv in [[0.5, 0.5], [0.1, 0.93], [0.999, 0.001], [7.0 / 32.0, 0.5]] {
        let p = sample_shape_map(&cmap, uv).unwrap();
        for k in 0..3 {
            assert!((p[k] - [0.25, -0.5, 2.0][k]).abs() < 1e-12);
        }
    }
}

#[test]
fn all_invalid_neighbourhood_errors() {
    let m = Mesh::new(
        vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 1.0]],
        vec![[0, 1, 2]],
        Some(vec![[0.0, 0.0], [0.3, 0.0], [0.0, 0.3]]),
    )
    .unwrap();
    let map = rasterize_shape_map(&m, UvSource::Mesh, 16, Execution::Sequential).unwrap();
    assert!(matches!(
        sample_shape_map(&map, [0.9, 0.9]),
        Err(Error::InvalidNeighborhood { .. })
    ));
}

#[test]
fn unwrap_coordinates() {
    let r = 0.7;
    let m = Mesh::new(
        vec![[r, -1.0, 0.0], [0.2, 0.5, 0.4], [0.2, 1.0, 0.4], [-0.3, 0.0, -0.6]],
        vec![[0, 1, 3], [1, 2, 3]],
        None,
    )
    .unwrap();
    let un = cylindrical_unwrap(&m).unwrap();
    assert_eq!(un.uvs[0], [0.5, 0.0]);
    assert_eq!(un.uvs[1][0], un.uvs[2][0]);
    assert_eq!(un.uvs[2][1], 1.0);
    let flat = Mesh::new(vec![[0.0; 3], [1.0, 0.0, 1.0]], vec![], None).unwrap();
    assert!(matches!(cylindrical_unwrap(&flat), Err(Error::Degenerate(_))));
}

#[test]
fn seam_faces_are_shifted() {
    // A ring of 8 quads around the y axis; one quad straddles u = 0/1.
    let k = 8;
    let mut verts = Vec::new();
    for level in [0.0, 1.0] {
        for i in 0..k {
            let a = std::f64::consts::TAU * (i as f64 + 0.5) / k as f64;
            verts.push([a.cos(), level, a.sin()]);
        }
    }
    let mut faces = Vec::new();
    for i in 0..k as u32 {
        let j = (i + 1) % k as u32;
        faces.push([i, j, j + k as u32]);
        faces.push([i, j + k as u32, i + k as u32]);
    }
    let m = Mesh::new(verts, faces, None).unwrap();
    let un = cylindrical_unwrap(&m).unwrap();
    assert_eq!(un.wrapped_faces.iter().filter(|&&w| w).count(), 2);
    assert!(!un.seam_vertices.is_empty());
    for (fi, f) in m.faces().iter().enumerate() {
        let t = un.face_uvs(*f, fi);
        let area = (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]);
        assert!(area.abs() > 0.0);
        let span = t.iter().map(|c| c[0]).fold(f64::MIN, f64::max) - t.iter().map(|c| c[0]).fold(f64::MAX, f64::min);
        assert!(span <= 0.5);
    }
    // the band between the two rings is fully covered, including across the seam
    let map = rasterize_shape_map(&m, UvSource::Cylindrical(&un), 32, Execution::Sequential).unwrap();
    assert!((0..32).all(|c| map.pixel(c, 16).is_some()));
}

#[test]
fn parallel_matches_sequential() {
    let m = affine_grid(9);
    let a = rasterize_shape_map(&m, UvSource::Mesh, 100, Execution::Sequential).unwrap();
    let b = rasterize_shape_map(&m, UvSource::Mesh, 100, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn png_persistence_round_trip() {
    let m = affine_grid(3);
    let map = rasterize_shape_map(&m, UvSource::Mesh, 24, Execution::Sequential).unwrap();
    let back = ShapeMap::from_files(&map.to_png().unwrap(), &map.mask_png().unwrap(), &map.sidecar()).unwrap();
    assert_eq!(back.valid, map.valid);
    for (a, b) in back.data.iter().zip(&map.data) {
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() <= 0.5 / 65535.0 + 1e-15);
        }
    }
    let json = serde_json::to_string(&map.sidecar()).unwrap();
    let parsed: ShapeMapSidecar = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed, map.sidecar());
}

proptest! {
    #[test]
    fn encoding_is_invertible(lo in -10.0f64..10.0, ext in 1e-3f64..10.0, t in 0.0f64..=1.0) {
        let r = AxisRange { min: lo, max: lo + ext };
        let p = lo + t * ext;
        prop_assert!((r.decode(r.encode(p)) - p).abs() <= 1e-6);
    }
}
