use rand::Rng;

use headforge_core::color::{AlbedoMap, Region, SemanticColorMap, SemanticMask};
use headforge_core::mesh::Mesh;
use headforge_core::shapemap::{max_vertex_error, rasterize_shape_map, reconstruct_vertices, UnwrapResult, UvSource};
use headforge_core::synth::{synthesize_cohort_dataset, DatasetSpec};
use headforge_core::{Execution, Result};

/// A random mask with every region present, and an albedo whose regions are
/// noisy around random base colors. Bases near 0 or 255 make clamping likely.
pub fn random_recolor_fixture(rng: &mut impl Rng) -> (AlbedoMap, SemanticMask) {
    let width = rng.random_range(4..48);
    let height = rng.random_range(4..48);
    let n = width * height;
    let mut labels: Vec<Region> = (0..n)
        .map(|_| Region::from_index(rng.random_range(0..5)).expect("region index"))
        .collect();
    let mut slots: Vec<usize> = (0..n).collect();
    for (k, r) in [
        Region::Background,
        Region::Skin,
        Region::Lips,
        Region::Eyebrows,
        Region::Tongue,
    ]
    .into_iter()
    .enumerate()
    {
        let pick = rng.random_range(k..n);
        slots.swap(k, pick);
        labels[slots[k]] = r;
    }
    let base: Vec<[u8; 3]> = (0..5).map(|_| rng.random()).collect();
    let spread = rng.random_range(0..40i32);
    let rgb = labels
        .iter()
        .map(|r| {
            let b = base[*r as usize];
            b.map(|c| (c as i32 + rng.random_range(-spread..=spread)).clamp(0, 255) as u8)
        })
        .collect();
    (
        AlbedoMap { width, height, rgb },
        SemanticMask {
            width,
            height,
            labels,
            uv_layout_id: "fixture".into(),
        },
    )
}

pub fn random_target(rng: &mut impl Rng) -> SemanticColorMap {
    SemanticColorMap {
        skin: rng.random(),
        lips: rng.random(),
        eyebrows: rng.random(),
        tongue: rng.random(),
    }
}

/// Per-channel median, even counts averaged and rounded half up.
pub fn median_oracle(albedo: &AlbedoMap, mask: &SemanticMask, region: Region) -> [u8; 3] {
    let mut out = [0u8; 3];
    for (ch, o) in out.iter_mut().enumerate() {
        let mut v: Vec<u32> = albedo
            .rgb
            .iter()
            .zip(&mask.labels)
            .filter(|(_, l)| **l == region)
            .map(|(p, _)| p[ch] as u32)
            .collect();
        v.sort_unstable();
        let n = v.len();
        *o = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]).div_ceil(2)
        } as u8;
    }
    out
}

/// Whether shifting a region so its median becomes `target` pushes any
/// channel outside `0..=255`.
pub fn clamps(albedo: &AlbedoMap, mask: &SemanticMask, target: &SemanticColorMap) -> bool {
    Region::EDITABLE.into_iter().any(|r| {
        let med = median_oracle(albedo, mask, r);
        let t = target.get(r).expect("editable");
        albedo
            .rgb
            .iter()
            .zip(&mask.labels)
            .filter(|(_, l)| **l == r)
            .any(|(p, _)| {
                (0..3).any(|c| {
                    let v = p[c] as i32 + t[c] as i32 - med[c] as i32;
                    !(0..=255).contains(&v)
                })
            })
    })
}

/// `count` heads from the default dataset at `seed`.
pub fn synthetic_heads(seed: u64, count: usize) -> Vec<Mesh> {
    synthesize_cohort_dataset(&DatasetSpec::with_seed(seed), Execution::Parallel)
        .expect("default spec")
        .into_iter()
        .take(count)
        .map(|s| s.mesh)
        .collect()
}

pub fn bbox_diagonal(mesh: &Mesh) -> f64 {
    let (lo, hi) = mesh.bbox().expect("non-empty mesh");
    (0..3).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt()
}

/// Max vertex error after baking `mesh` into a shape map through its own
/// cylindrical UVs and sampling it back at those UVs.
pub fn round_trip_error(mesh: &Mesh, resolution: usize) -> Result<f64> {
    let uvs = mesh.uvs().expect("synthetic heads carry UVs").to_vec();
    let layout = UnwrapResult::from_uvs(uvs.clone(), mesh.faces());
    let map = rasterize_shape_map(mesh, UvSource::Cylindrical(&layout), resolution, Execution::Parallel)?;
    Ok(max_vertex_error(&reconstruct_vertices(&map, &uvs)?, mesh.vertices()))
}
