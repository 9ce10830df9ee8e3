//! Procedural head-like meshes with planted demographic deformations.
//!
//! The template is a subdivided icosahedron with a vertex on each pole,
//! reshaped into an ellipsoid-like solid with a nose, brow ridge, chin and ears. Every
//! synthesized sample shares its topology and its cylindrical UV layout.
//!
//! A sample is `template + amplitude * deformation(label) + noise`, where the
//! identity noise is a random combination of smooth radial fields anchored on
//! the sphere. Sample `i` draws from a generator seeded with `seed ^ i`, so
//! datasets are identical under any scheduling.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::color::{AlbedoMap, Region, SemanticMask};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::{uv_layout_id, FlatShape, Mesh};
use crate::model::{Age, AttributeLabel, Gender, Race};
use crate::rng::NormalSource;
use crate::shapemap::{cylindrical_unwrap, UnwrapResult};

/// Template vertex counts for subdivision levels 1 through 7.
pub const TEMPLATE_VERTEX_COUNTS: [usize; 7] = [42, 162, 642, 2562, 10242, 40962, 163842];

const ELLIPSOID: [f64; 3] = [0.78, 1.0, 0.9];
/// Weight of `cos(latitude)` in the vertical profile; the rest is linear in
/// latitude, which makes crown and chin slightly conical so the cylindrical
/// map does not pinch near the poles.
const POLAR_BLEND: f64 = 0.3;
const NOISE_FIELDS: usize = 16;
const NOISE_SIGMA: f64 = 0.45;
const COHORT_SIGMA: f64 = 0.35;

/// Radial bump: `weight * exp(-|d - anchor|^2 / (2 sigma^2))` for a unit
/// direction `d`; `anchor` is normalized before use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub anchor: [f64; 3],
    pub sigma: f64,
    pub weight: f64,
}

impl Bump {
    fn new(anchor: [f64; 3], sigma: f64, weight: f64) -> Self {
        Bump {
            anchor: unit(anchor),
            sigma,
            weight,
        }
    }

    fn eval(&self, d: [f64; 3]) -> f64 {
        let a = unit(self.anchor);
        let r2: f64 = (0..3).map(|k| (d[k] - a[k]).powi(2)).sum();
        self.weight * (-r2 / (2.0 * self.sigma * self.sigma)).exp()
    }
}

fn unit(p: [f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    p.map(|x| x / n)
}

/// A cohort's planted displacement: an explicit per-coordinate vector, or a
/// list of radial bumps rescaled to unit Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deformation {
    Explicit(FlatShape),
    Bumps(Vec<Bump>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub label: AttributeLabel,
    pub deformation: Deformation,
    pub amplitude: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub template_subdivisions: u32,
    /// Empty means the built-in 24 label cohorts over 104 samples.
    pub cohorts: Vec<CohortSpec>,
    /// Standard deviation of each identity field's amplitude.
    pub identity_noise_std: f64,
    pub seed: u64,
    pub albedo_resolution: usize,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            template_subdivisions: 3,
            cohorts: Vec::new(),
            identity_noise_std: 0.01,
            seed: 0,
            albedo_resolution: 256,
        }
    }
}

impl DatasetSpec {
    pub fn with_seed(seed: u64) -> Self {
        DatasetSpec {
            seed,
            ..Self::default()
        }
    }

    /// The cohorts actually synthesized: the explicit list, or the built-in
    /// one scaled to `identity_noise_std`.
    pub fn resolved_cohorts(&self) -> Result<Vec<CohortSpec>> {
        if !self.cohorts.is_empty() {
            return Ok(self.cohorts.clone());
        }
        let t = template_parts(self.template_subdivisions)?;
        Ok(default_cohorts(&t, self.identity_noise_std, 104))
    }

    pub fn total_count(&self) -> Result<usize> {
        Ok(self.resolved_cohorts()?.iter().map(|c| c.count).sum())
    }
}

/// Signed bumps for one attribute value.
fn group_bumps(label: &AttributeLabel) -> Vec<Bump> {
    let s = COHORT_SIGMA;
    let mut b = Vec::new();
    let g = match label.gender {
        Gender::Male => 1.0,
        Gender::Female => -1.0,
    };
    b.push(Bump::new([0.7, -0.55, 0.45], s, g));
    b.push(Bump::new([-0.7, -0.55, 0.45], s, g));
    match label.age {
        Age::Young => {
            b.push(Bump::new([0.6, -0.1, 0.75], s, 1.0));
            b.push(Bump::new([-0.6, -0.1, 0.75], s, 1.0));
        }
        Age::Middle => b.push(Bump::new([0.0, 0.9, -0.3], s, 1.0)),
        Age::Old => {
            b.push(Bump::new([0.6, -0.1, 0.75], s, -1.0));
            b.push(Bump::new([-0.6, -0.1, 0.75], s, -1.0));
            b.push(Bump::new([0.0, -0.8, 0.5], s, 1.0));
        }
    }
    match label.race {
        Race::Asian => b.push(Bump::new([0.0, 0.15, 1.0], s, -1.0)),
        Race::Caucasian => b.push(Bump::new([0.0, 0.15, 1.0], s, 1.0)),
        Race::AfricanAmerican => b.push(Bump::new([0.0, -0.35, 0.95], s, 1.0)),
        Race::Mixed => b.push(Bump::new([0.0, 0.3, -1.0], s, 1.0)),
    }
    b
}

/// Fibonacci-sphere anchors for the identity fields.
fn noise_anchors() -> [[f64; 3]; NOISE_FIELDS] {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    std::array::from_fn(|k| {
        let y = 1.0 - 2.0 * (k as f64 + 0.5) / NOISE_FIELDS as f64;
        let r = (1.0 - y * y).sqrt();
        let t = golden * k as f64;
        [r * t.cos(), y, r * t.sin()]
    })
}

struct TemplateParts {
    mesh: Mesh,
    /// Unit sphere direction of each vertex; displacements act along it.
    dirs: Vec<[f64; 3]>,
    /// Identity field values, `NOISE_FIELDS` per vertex.
    noise_basis: Vec<[f64; NOISE_FIELDS]>,
}

impl TemplateParts {
    fn dim(&self) -> usize {
        3 * self.dirs.len()
    }

    fn bump_field(&self, bumps: &[Bump]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for d in &self.dirs {
            let h: f64 = bumps.iter().map(|b| b.eval(*d)).sum();
            out.extend(d.map(|x| h * x));
        }
        out
    }

    /// `sqrt(E |noise|^2)` for unit field amplitudes.
    fn noise_norm(&self) -> f64 {
        self.noise_basis
            .iter()
            .map(|f| f.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    fn deformation(&self, d: &Deformation) -> Result<Vec<f64>> {
        match d {
            Deformation::Explicit(v) => {
                if v.len() != self.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim(),
                        found: v.len(),
                    });
                }
                Ok(v.0.clone())
            }
            Deformation::Bumps(b) => {
                let f = self.bump_field(b);
                let n = f.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(n > 0.0) {
                    return Err(Error::Degenerate("bump deformation is zero".into()));
                }
                Ok(f.into_iter().map(|x| x / n).collect())
            }
        }
    }
}

fn default_cohorts(t: &TemplateParts, noise_std: f64, total: usize) -> Vec<CohortSpec> {
    let labels: Vec<AttributeLabel> = AttributeLabel::all().collect();
    let amplitude = 5.0 * noise_std * t.noise_norm();
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| CohortSpec {
            label: *l,
            deformation: Deformation::Bumps(group_bumps(l)),
            amplitude,
            count: total / labels.len() + usize::from(i < total % labels.len()),
        })
        .collect()
}

fn icosphere(subdivisions: u32) -> (Vec<[f64; 3]>, Vec<[u32; 3]>) {
    let lat = 0.5f64.atan();
    let mut v = vec![[0.0, 1.0, 0.0]];
    for ring in 0..2 {
        for i in 0..5 {
            let (y, off) = if ring == 0 { (lat, 0.0) } else { (-lat, 0.5) };
            let lon = std::f64::consts::TAU * (i as f64 + off) / 5.0;
            v.push([y.cos() * lon.cos(), y.sin(), y.cos() * lon.sin()]);
        }
    }
    v.push([0.0, -1.0, 0.0]);
    let mut f = Vec::new();
    for i in 0..5u32 {
        let (u0, u1) = (1 + i, 1 + (i + 1) % 5);
        let (l0, l1) = (6 + i, 6 + (i + 1) % 5);
        f.extend([[0, u0, u1], [11, l1, l0], [u0, l0, u1], [u1, l0, l1]]);
    }
    for _ in 0..subdivisions {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, v: &mut Vec<[f64; 3]>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (v[a as usize], v[b as usize]);
                v.push(unit([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                (v.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(f.len() * 4);
        for &[a, b, c] in &f {
            let ab = mid(a, b, &mut v);
            let bc = mid(b, c, &mut v);
            let ca = mid(c, a, &mut v);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        f = next;
    }
    // outward winding
    for face in &mut f {
        let [a, b, c] = face.map(|i| v[i as usize]);
        let e1 = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let e2 = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let n = [
            e1[1] * e2[2] - e1[2] * e2[1],
            e1[2] * e2[0] - e1[0] * e2[2],
            e1[0] * e2[1] - e1[1] * e2[0],
        ];
        if n[0] * (a[0] + b[0] + c[0]) + n[1] * (a[1] + b[1] + c[1]) + n[2] * (a[2] + b[2] + c[2]) < 0.0 {
            face.swap(1, 2);
        }
    }
    (v, f)
}

fn template_parts(subdivisions: u32) -> Result<TemplateParts> {
    if !(1..=7).contains(&subdivisions) {
        return Err(Error::OutOfRange(format!(
            "template subdivisions {subdivisions} outside 1..=7"
        )));
    }
    let (dirs, faces) = icosphere(subdivisions);
    let features = [
        Bump::new([0.0, -0.05, 1.0], 0.16, 0.22),
        Bump::new([0.0, 0.32, 0.95], 0.12, 0.05),
        Bump::new([0.3, 0.32, 0.9], 0.12, 0.05),
        Bump::new([-0.3, 0.32, 0.9], 0.12, 0.05),
        Bump::new([0.0, -0.6, 0.8], 0.2, 0.06),
        Bump::new([1.0, 0.0, 0.0], 0.12, 0.08),
        Bump::new([-1.0, 0.0, 0.0], 0.12, 0.08),
    ];
    let vertices: Vec<[f64; 3]> = dirs
        .iter()
        .map(|d| {
            let r = 1.0 + features.iter().map(|b| b.eval(*d)).sum::<f64>();
            let th = d[1].clamp(-1.0, 1.0).acos();
            let y = POLAR_BLEND * d[1] + (1.0 - POLAR_BLEND) * (1.0 - 2.0 * th / std::f64::consts::PI);
            let p = [d[0], y, d[2]];
            std::array::from_fn(|k| ELLIPSOID[k] * r * p[k])
        })
        .collect();
    let anchors = noise_anchors();
    let noise_basis = dirs
        .iter()
        .map(|d| std::array::from_fn(|k| Bump::new(anchors[k], NOISE_SIGMA, 1.0).eval(*d)))
        .collect();
    let mut mesh = Mesh::new(vertices, faces, None)?.with_id(format!("template_l{subdivisions}"));
    let unwrap = cylindrical_unwrap(&mesh)?;
    mesh.set_uvs(Some(unwrap.uvs))?;
    Ok(TemplateParts {
        mesh,
        dirs,
        noise_basis,
    })
}

/// Closed head-like template with cylindrical UVs baked in.
pub fn build_template_head(subdivisions: u32) -> Result<Mesh> {
    Ok(template_parts(subdivisions)?.mesh)
}

/// Cylindrical layout of the template; valid for every synthesized mesh of
/// the same level, whatever its deformation.
pub fn template_unwrap(subdivisions: u32) -> Result<UnwrapResult> {
    cylindrical_unwrap(&build_template_head(subdivisions)?)
}

/// Per-sample planted displacement `amplitude * deformation`, in template
/// coordinates, for each synthesized sample in output order.
pub fn planted_displacements(spec: &DatasetSpec) -> Result<Vec<FlatShape>> {
    let t = template_parts(spec.template_subdivisions)?;
    let cohorts = spec.resolved_cohorts()?;
    let fields = cohorts
        .iter()
        .map(|c| {
            Ok(t.deformation(&c.deformation)?
                .into_iter()
                .map(|x| c.amplitude * x)
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(sample_order(&cohorts)
        .into_iter()
        .map(|ci| FlatShape(fields[ci].clone()))
        .collect())
}

/// Round-robin over cohorts until every count is exhausted.
fn sample_order(cohorts: &[CohortSpec]) -> Vec<usize> {
    let mut left: Vec<usize> = cohorts.iter().map(|c| c.count).collect();
    let mut order = Vec::new();
    while left.iter().any(|&n| n > 0) {
        for (i, n) in left.iter_mut().enumerate() {
            if *n > 0 {
                *n -= 1;
                order.push(i);
            }
        }
    }
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub mesh: Mesh,
    pub label: AttributeLabel,
    pub albedo: AlbedoMap,
}

fn validate(spec: &DatasetSpec, cohorts: &[CohortSpec]) -> Result<()> {
    if !(spec.identity_noise_std >= 0.0) {
        return Err(Error::OutOfRange("identity_noise_std must be non-negative".into()));
    }
    if spec.albedo_resolution < 4 {
        return Err(Error::OutOfRange("albedo_resolution must be at least 4".into()));
    }
    for c in cohorts {
        if c.count == 0 || !(c.amplitude >= 0.0) {
            return Err(Error::OutOfRange(format!(
                "cohort {} needs count >= 1 and amplitude >= 0",
                c.label
            )));
        }
    }
    let total: usize = cohorts.iter().map(|c| c.count).sum();
    if total < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: total });
    }
    Ok(())
}

/// Generates the dataset described by `spec`, in round-robin cohort order.
pub fn synthesize_cohort_dataset(spec: &DatasetSpec, exec: Execution) -> Result<Vec<SynthSample>> {
    let t = template_parts(spec.template_subdivisions)?;
    let cohorts = spec.resolved_cohorts()?;
    validate(spec, &cohorts)?;
    let fields = cohorts
        .iter()
        .map(|c| t.deformation(&c.deformation))
        .collect::<Result<Vec<_>>>()?;
    let mask = trace_default_mask(spec.albedo_resolution);
    let order = sample_order(&cohorts);
    let base = t.mesh.flatten();
    let samples = exec.map(order.len(), |i| {
        let c = &cohorts[order[i]];
        let mut rng = NormalSource::new(spec.seed ^ i as u64);
        let amps: Vec<f64> = (0..NOISE_FIELDS)
            .map(|_| spec.identity_noise_std * rng.standard_normal())
            .collect();
        let mut flat = base.clone();
        for (v, (d, basis)) in t.dirs.iter().zip(&t.noise_basis).enumerate() {
            let h: f64 = basis.iter().zip(&amps).map(|(b, a)| b * a).sum();
            for k in 0..3 {
                flat.0[3 * v + k] += c.amplitude * fields[order[i]][3 * v + k] + h * d[k];
            }
        }
        let mesh = t
            .mesh
            .with_flat(&flat)
            .expect("dimension checked")
            .with_id(format!("head_{i:04}"));
        SynthSample {
            mesh,
            label: c.label,
            albedo: synth_albedo(&mask, &c.label, &mut rng),
        }
    });
    Ok(samples)
}

/// Skin color for a label: race base, lightened for young and darkened for
/// old, shifted slightly by gender.
pub fn cohort_skin_color(label: &AttributeLabel) -> [u8; 3] {
    let base: [i32; 3] = match label.race {
        Race::Asian => [224, 184, 150],
        Race::Caucasian => [236, 200, 178],
        Race::AfricanAmerican => [141, 95, 66],
        Race::Mixed => [190, 140, 105],
    };
    let age = match label.age {
        Age::Young => 8,
        Age::Middle => 0,
        Age::Old => -8,
    };
    let gender = match label.gender {
        Gender::Male => -4,
        Gender::Female => 4,
    };
    base.map(|c| (c + age + gender).clamp(0, 255) as u8)
}

fn synth_albedo(mask: &SemanticMask, label: &AttributeLabel, rng: &mut NormalSource) -> AlbedoMap {
    let skin = cohort_skin_color(label);
    let lips = [(skin[0] as u16 * 4 / 5 + 40).min(255) as u8, skin[1] / 2, skin[2] / 2];
    let brows = [50, 35, 25];
    let tongue = [200, 90, 100];
    let rgb = mask
        .labels
        .iter()
        .map(|r| {
            let c = match r {
                Region::Background => return [0, 0, 0],
                Region::Skin => skin,
                Region::Lips => lips,
                Region::Eyebrows => brows,
                Region::Tongue => tongue,
            };
            c.map(|x| {
                let jitter = (rng.uniform() * 13.0) as i32 - 6;
                (x as i32 + jitter).clamp(0, 255) as u8
            })
        })
        .collect();
    AlbedoMap {
        width: mask.width,
        height: mask.height,
        rgb,
    }
}

fn in_ellipse(u: f64, v: f64, cu: f64, cv: f64, ru: f64, rv: f64) -> bool {
    ((u - cu) / ru).powi(2) + ((v - cv) / rv).powi(2) <= 1.0
}

/// Region layout of the template's cylindrical UVs: the face looks along
/// `+z`, which lands at `u = 0.75`. The tongue sits on its own island in
/// the background band under the chin.
pub fn trace_default_mask(resolution: usize) -> SemanticMask {
    let (w, h) = (resolution, resolution);
    let labels = (0..w * h)
        .map(|i| {
            let (c, r) = (i % w, i / w);
            let u = (c as f64 + 0.5) / w as f64;
            let v = 1.0 - (r as f64 + 0.5) / h as f64;
            if (0.02..=0.10).contains(&u) && (0.01..=0.04).contains(&v) {
                Region::Tongue
            } else if v < 0.05 {
                Region::Background
            } else if in_ellipse(u, v, 0.75, 0.37, 0.04, 0.018) {
                Region::Lips
            } else if in_ellipse(u, v, 0.705, 0.62, 0.03, 0.01) || in_ellipse(u, v, 0.795, 0.62, 0.03, 0.01) {
                Region::Eyebrows
            } else {
                Region::Skin
            }
        })
        .collect();
    SemanticMask {
        width: w,
        height: h,
        labels,
        uv_layout_id: template_layout_id(),
    }
}

fn template_layout_id() -> String {
    let t = build_template_head(3).expect("level 3 is valid");
    uv_layout_id(t.uvs())
}

const DEFAULT_MASK_PNG: &[u8] = include_bytes!("../assets/default_mask_256.png");

/// The shipped 256x256 semantic mask for the template layout.
pub fn default_mask() -> SemanticMask {
    SemanticMask::from_png(DEFAULT_MASK_PNG, template_layout_id()).expect("bundled mask decodes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{validate_topology, Topology};

    #[test]
    fn vertex_count_table() {
        for (i, &n) in TEMPLATE_VERTEX_COUNTS.iter().take(5).enumerate() {
            let m = build_template_head(i as u32 + 1).unwrap();
            assert_eq!(m.vertex_count(), n);
            assert_eq!(m.face_count(), 2 * n - 4);
        }
        assert!(build_template_head(0).is_err());
        assert!(build_template_head(8).is_err());
    }

    #[test]
    fn template_is_deterministic_and_self_consistent() {
        let a = build_template_head(2).unwrap();
        let b = build_template_head(2).unwrap();
        assert_eq!(a, b);
        let report = validate_topology(&a, &Topology::from_mesh(&a));
        assert!(report.ok);
        assert!(a.uvs().is_some());
    }

    #[test]
    fn template_faces_wind_outward() {
        let m = build_template_head(2).unwrap();
        let v = m.vertices();
        let mut volume = 0.0;
        for f in m.faces() {
            let [a, b, c] = f.map(|i| v[i as usize]);
            volume += a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0]);
        }
        assert!(volume > 0.0);
    }

    #[test]
    fn zero_noise_cohort_members_are_template_plus_deformation() {
        let t = template_parts(2).unwrap();
        let label = AttributeLabel::new(Gender::Female, Age::Old, Race::Mixed);
        let spec = DatasetSpec {
            template_subdivisions: 2,
            cohorts: vec![CohortSpec {
                label,
                deformation: Deformation::Bumps(group_bumps(&label)),
                amplitude: 0.3,
                count: 3,
            }],
            identity_noise_std: 0.0,
            seed: 9,
            albedo_resolution: 16,
        };
        let out = synthesize_cohort_dataset(&spec, Execution::Sequential).unwrap();
        let d = t.deformation(&Deformation::Bumps(group_bumps(&label))).unwrap();
        let expected: Vec<f64> = t.mesh.flatten().0.iter().zip(&d).map(|(b, x)| b + 0.3 * x).collect();
        for s in &out {
            assert_eq!(s.mesh.flatten().0, expected);
        }
    }

    #[test]
    fn default_dataset_shape() {
        let spec = DatasetSpec {
            albedo_resolution: 32,
            ..DatasetSpec::with_seed(1)
        };
        let out = synthesize_cohort_dataset(&spec, Execution::Parallel).unwrap();
        assert_eq!(out.len(), 104);
        let topo = Topology::from_mesh(&out[0].mesh);
        assert!(out.iter().all(|s| Topology::from_mesh(&s.mesh) == topo));
        let labels: Vec<_> = AttributeLabel::all().collect();
        assert_eq!(out[0].label, labels[0]);
        assert_eq!(out[23].label, labels[23]);
        assert_eq!(out[24].label, labels[0]);
    }

    #[test]
    fn seeds_and_schedules() {
        let spec = DatasetSpec {
            albedo_resolution: 16,
            template_subdivisions: 2,
            ..DatasetSpec::with_seed(5)
        };
        let a = synthesize_cohort_dataset(&spec, Execution::Sequential).unwrap();
        let b = synthesize_cohort_dataset(&spec, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let c = synthesize_cohort_dataset(&DatasetSpec { seed: 6, ..spec }, Execution::Parallel).unwrap();
        assert_ne!(a[0].mesh.vertices(), c[0].mesh.vertices());
    }

    #[test]
    fn explicit_deformation_dimension_is_checked() {
        let spec = DatasetSpec {
            template_subdivisions: 1,
            cohorts: vec![CohortSpec {
                label: AttributeLabel::all().next().unwrap(),
                deformation: Deformation::Explicit(FlatShape::zeros(5)),
                amplitude: 1.0,
                count: 2,
            }],
            ..DatasetSpec::default()
        };
        assert!(matches!(
            synthesize_cohort_dataset(&spec, Execution::Sequential),
            Err(Error::DimensionMismatch {
                expected: 126,
                found: 5
            })
        ));
    }

    #[test]
    fn skin_medians_follow_cohort_code() {
        let spec = DatasetSpec {
            albedo_resolution: 64,
            template_subdivisions: 1,
            ..DatasetSpec::with_seed(2)
        };
        let mask = trace_default_mask(64);
        for s in synthesize_cohort_dataset(&spec, Execution::Parallel)
            .unwrap()
            .iter()
            .take(24)
        {
            let m = crate::color::region_median(&s.albedo, &mask, Region::Skin).unwrap();
            let code = cohort_skin_color(&s.label);
            for k in 0..3 {
                assert!((m[k] as i32 - code[k] as i32).abs() <= 1, "{m:?} vs {code:?}");
            }
        }
    }

    #[test]
    fn shipped_mask_matches_trace() {
        let traced = trace_default_mask(256);
        if std::env::var_os("HEADFORGE_REGEN_ASSETS").is_some() {
            let path = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/default_mask_256.png");
            std::fs::write(path, traced.to_png().unwrap()).unwrap();
            return;
        }
        let shipped = default_mask();
        assert_eq!(shipped, traced);
        for r in Region::EDITABLE {
            assert!(shipped.count(r) > 0, "{r:?}");
        }
    }

    #[test]
    fn spec_json_defaults() {
        let spec: DatasetSpec = serde_json::from_str(r#"{"seed": 3}"#).unwrap();
        assert_eq!(spec, DatasetSpec::with_seed(3));
        assert!(serde_json::from_str::<DatasetSpec>(r#"{"sed": 3}"#).is_err());
        assert_eq!(spec.total_count().unwrap(), 104);
    }
}
