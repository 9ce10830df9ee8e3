//! Operations shared by the CLI and the HTTP service. Both front ends call
//! exactly these functions, so equal inputs give equal bytes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use headforge_core::color::{recolor, AlbedoMap, SemanticColorMap, SemanticMask};
use headforge_core::mesh::{fit_normalization, Mesh, MeshFormat};
use headforge_core::metrics::{evaluate_all, MetricsConfig, MetricsReport, SampleSet, SetRole};
use headforge_core::model::{Age, AttributeLabel, AttributeValue, Gender, Keep, Race, SampleRequest, ShapeModel};
use headforge_core::modelfile::ModelMetadata;
use headforge_core::shapemap::{cylindrical_unwrap, rasterize_shape_map, UnwrapResult, UvSource};
use headforge_core::synth::{default_mask, SynthSample};
use headforge_core::{Error, Execution, Result};

/// Shape-map resolution used when a request does not name one.
pub const DEFAULT_RESOLUTION: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LabelRow {
    id: String,
    gender: Gender,
    age: Age,
    race: Race,
}

/// Parses a `labels.csv` with columns `id, gender, age, race`.
pub fn parse_labels_csv(bytes: &[u8]) -> Result<Vec<(String, AttributeLabel)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    reader
        .deserialize::<LabelRow>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| Error::Parse {
                line: i + 2,
                message: e.to_string(),
            })?;
            Ok((row.id, AttributeLabel::new(row.gender, row.age, row.race)))
        })
        .collect()
}

pub fn write_labels_csv<'a>(rows: impl IntoIterator<Item = (&'a str, AttributeLabel)>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (id, l) in rows {
        w.serialize(LabelRow {
            id: id.to_owned(),
            gender: l.gender,
            age: l.age,
            race: l.race,
        })
        .expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

/// PLY files start with `ply`; everything else is read as OBJ.
pub fn sniff_format(bytes: &[u8]) -> MeshFormat {
    if bytes.starts_with(b"ply") {
        MeshFormat::Ply
    } else {
        MeshFormat::Obj
    }
}

pub fn load_mesh_bytes(bytes: &[u8], id: &str) -> Result<Mesh> {
    Ok(Mesh::load(bytes, sniff_format(bytes))?.with_id(id))
}

fn mesh_path(dir: &Path, id: &str) -> Option<PathBuf> {
    ["obj", "ply"]
        .iter()
        .map(|ext| dir.join(format!("{id}.{ext}")))
        .find(|p| p.is_file())
}

/// A training set: `labels.csv` plus one `<id>.obj` or `<id>.ply` per row,
/// in row order.
pub fn load_dataset_dir(dir: &Path) -> Result<Vec<(Mesh, AttributeLabel)>> {
    let labels = parse_labels_csv(&std::fs::read(dir.join("labels.csv"))?)?;
    labels
        .into_iter()
        .map(|(id, label)| {
            let path = mesh_path(dir, &id)
                .ok_or_else(|| Error::InvalidMesh(format!("no mesh file for id {id:?} in {}", dir.display())))?;
            Ok((Mesh::read_path(path)?.with_id(id), label))
        })
        .collect()
}

/// Every `.obj` and `.ply` file in `dir`, sorted by file name.
pub fn load_mesh_dir(dir: &Path) -> Result<Vec<Mesh>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && MeshFormat::from_path(p).is_some())
        .collect();
    paths.sort();
    paths.iter().map(Mesh::read_path).collect()
}

pub fn fit_model(training: &[(Mesh, AttributeLabel)], keep: Keep) -> Result<(ShapeModel, ModelMetadata)> {
    let model = ShapeModel::fit(training, keep)?;
    let metadata = ModelMetadata {
        labels: training.iter().map(|(_, l)| *l).collect(),
        created_at: chrono::Utc::now().to_rfc3339(),
    };
    Ok((model, metadata))
}

/// UV layout used for a model's shape maps: its stored UVs read as a
/// cylindrical layout, or else a cylindrical unwrap of the mean shape.
pub fn model_layout(model: &ShapeModel) -> Result<UnwrapResult> {
    match &model.topology().uvs {
        Some(uvs) => Ok(UnwrapResult::from_uvs(uvs.clone(), &model.topology().faces)),
        None => cylindrical_unwrap(&model.mean_mesh()),
    }
}

pub fn obj_bytes(mesh: &Mesh) -> Vec<u8> {
    mesh.save(MeshFormat::Obj)
}

/// Maps a mesh from the model's normalized space back to the frame of its
/// training data, so exported meshes line up with the input meshes.
pub fn export_mesh(model: &ShapeModel, normalized: &Mesh) -> Mesh {
    model.normalization().invert(normalized)
}

/// A model sample in the training data frame.
pub fn sample_mesh(model: &ShapeModel, req: &SampleRequest) -> Result<Mesh> {
    Ok(export_mesh(model, &model.sample(req)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeMapFiles {
    pub position_png: Vec<u8>,
    pub mask_png: Vec<u8>,
    pub sidecar_json: Vec<u8>,
}

pub fn shape_map_files(mesh: &Mesh, uvs: UvSource<'_>, resolution: usize) -> Result<ShapeMapFiles> {
    let map = rasterize_shape_map(mesh, uvs, resolution, Execution::Parallel)?;
    Ok(ShapeMapFiles {
        position_png: map.to_png()?,
        mask_png: map.mask_png()?,
        sidecar_json: serde_json::to_vec_pretty(&map.sidecar())?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleArtifacts {
    pub obj: Vec<u8>,
    pub shape_map: ShapeMapFiles,
}

/// Draws a sample and bakes its shape map.
pub fn sample_artifacts(model: &ShapeModel, req: &SampleRequest, resolution: usize) -> Result<SampleArtifacts> {
    let mesh = sample_mesh(model, req)?;
    let layout = model_layout(model)?;
    Ok(SampleArtifacts {
        obj: obj_bytes(&mesh),
        shape_map: shape_map_files(&mesh, UvSource::Cylindrical(&layout), resolution)?,
    })
}

/// `mean + (1 - alpha) * dir(from) + alpha * dir(to)` with single-group
/// cohort offsets as directions, exported to the training data frame.
pub fn interpolate_mesh(model: &ShapeModel, from: AttributeValue, to: AttributeValue, alpha: f64) -> Result<Mesh> {
    let s1 = model.direction(from)?;
    let s2 = model.direction(to)?;
    Ok(export_mesh(model, &model.interpolate(&s1, &s2, alpha)?))
}

/// Mask PNGs read here are not tied to a known layout.
pub const EXTERNAL_LAYOUT: &str = "external";

pub fn read_mask(bytes: Option<&[u8]>) -> Result<SemanticMask> {
    match bytes {
        Some(b) => SemanticMask::from_png(b, EXTERNAL_LAYOUT),
        None => Ok(default_mask()),
    }
}

/// Recolors an albedo PNG; without a mask the built-in template mask is used.
pub fn recolor_png(albedo_png: &[u8], mask_png: Option<&[u8]>, target: &SemanticColorMap) -> Result<Vec<u8>> {
    let albedo = AlbedoMap::from_png(albedo_png)?;
    let mask = read_mask(mask_png)?;
    recolor(&albedo, &mask, target, Execution::Parallel)?.to_png()
}

/// Fits the normalization on the real set, applies it to both sets and
/// evaluates every metric.
pub fn metrics_report(generated: &[Mesh], real: &[Mesh], cfg: &MetricsConfig) -> Result<MetricsReport> {
    if real.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: real.len(),
        });
    }
    let norm = fit_normalization(real)?;
    let normalized = |ms: &[Mesh]| ms.iter().map(|m| norm.apply(m)).collect::<Vec<_>>();
    let gen = SampleSet::from_meshes(&normalized(generated), SetRole::Generated)?;
    let real = SampleSet::from_meshes(&normalized(real), SetRole::Real)?;
    evaluate_all(&gen, &real, cfg)
}

/// Writes a synthesized dataset: `<id>.obj`, `<id>_albedo.png`,
/// `labels.csv` and `mask.png` (the albedo mask at matching resolution).
pub fn write_dataset(dir: &Path, samples: &[SynthSample], mask: &SemanticMask) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for s in samples {
        s.mesh.write_path(dir.join(format!("{}.obj", s.mesh.id())))?;
        std::fs::write(dir.join(format!("{}_albedo.png", s.mesh.id())), s.albedo.to_png()?)?;
    }
    std::fs::write(
        dir.join("labels.csv"),
        write_labels_csv(samples.iter().map(|s| (s.mesh.id(), s.label))),
    )?;
    std::fs::write(dir.join("mask.png"), mask.to_png()?)?;
    Ok(())
}
