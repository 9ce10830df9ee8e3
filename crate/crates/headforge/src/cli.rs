use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use headforge_core::color::SemanticColorMap;
use headforge_core::mesh::Mesh;
use headforge_core::metrics::{DiagonalMode, MetricsConfig};
use headforge_core::model::{AttributeValue, Cohort, Keep, SampleRequest};
use headforge_core::modelfile::{load_model, save_model};
use headforge_core::shapemap::{cylindrical_unwrap, UnwrapResult, UvSource};
use headforge_core::synth::{synthesize_cohort_dataset, trace_default_mask, DatasetSpec};
use headforge_core::Execution;

use crate::error::{ApiError, ApiResult};
use crate::ops;

#[derive(Debug, Parser)]
#[command(
    name = "headforge",
    version,
    about = "PCA head models, shape maps, recoloring and shape metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a shape model on a dataset directory (labels.csv plus meshes).
    Fit(FitArgs),
    /// Draw a sample from a model file.
    Sample(SampleArgs),
    /// Blend two attribute directions.
    Interpolate(InterpolateArgs),
    /// Rasterize a mesh into a position map.
    Shapemap(ShapemapArgs),
    /// Move each region's median color to a target.
    Recolor(RecolorArgs),
    /// Evaluate generated meshes against real ones.
    Metrics(MetricsArgs),
    /// Write a synthetic labelled dataset.
    Synth(SynthArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep exactly this many components.
    #[arg(long, conflicts_with = "variance")]
    pub components: Option<usize>,
    /// Keep enough components to explain this variance fraction.
    #[arg(long)]
    pub variance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated component weights; overrides the seed.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Cohort such as `male/old/asian` or `female/*/*`.
    #[arg(long)]
    pub cohort: Option<Cohort>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the sample's shape map (with `.mask.png` and `.json`).
    #[arg(long)]
    pub shapemap: Option<PathBuf>,
    #[arg(long, default_value_t = ops::DEFAULT_RESOLUTION)]
    pub res: usize,
}

#[derive(Debug, Args)]
pub struct InterpolateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub from: AttributeValue,
    #[arg(long)]
    pub to: AttributeValue,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum UvMode {
    /// Unwrap the mesh around the vertical axis.
    Cylindrical,
    /// Use the mesh's own texture coordinates as they are.
    Mesh,
    /// Use the mesh's texture coordinates as a cylindrical layout.
    MeshCylindrical,
}

#[derive(Debug, Args)]
pub struct ShapemapArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, default_value_t = ops::DEFAULT_RESOLUTION)]
    pub res: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = UvMode::Cylindrical)]
    pub uv: UvMode,
}

#[derive(Debug, Args)]
pub struct RecolorArgs {
    #[arg(long)]
    pub albedo: PathBuf,
    /// Semantic mask PNG; defaults to the built-in template mask.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// JSON `{"skin": [r,g,b], "lips": .., "eyebrows": .., "tongue": ..}`.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Mode {
    ExcludeSelf,
    PaperLiteral,
}

impl From<Mode> for DiagonalMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::ExcludeSelf => DiagonalMode::ExcludeSelf,
            Mode::PaperLiteral => DiagonalMode::PaperLiteral,
        }
    }
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub generated: PathBuf,
    #[arg(long)]
    pub real: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::ExcludeSelf)]
    pub mode: Mode,
    /// Use this threshold instead of deriving it from the real set.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Dataset spec JSON; omitted fields take their defaults.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Move the last N samples to `<out>/holdout`.
    #[arg(long, default_value_t = 0)]
    pub holdout: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, env = "HEADFORGE_DATA_ROOT", default_value = "headforge-data")]
    pub data_root: PathBuf,
}

fn read(path: &Path) -> ApiResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| ApiError::bad_request(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> ApiResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes).map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))
}

/// `map.png` -> `map.mask.png`, `map.json`.
fn shapemap_paths(out: &Path) -> (PathBuf, PathBuf) {
    (out.with_extension("mask.png"), out.with_extension("json"))
}

fn write_shapemap(out: &Path, files: &ops::ShapeMapFiles) -> ApiResult<()> {
    let (mask, sidecar) = shapemap_paths(out);
    write(out, &files.position_png)?;
    write(&mask, &files.mask_png)?;
    write(&sidecar, &files.sidecar_json)
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("json output"));
}

fn fit(a: FitArgs) -> ApiResult<()> {
    let keep = match (a.components, a.variance) {
        (Some(k), _) => Keep::Components(k),
        (None, Some(f)) => Keep::VarianceFraction(f),
        (None, None) => Keep::default(),
    };
    let training = ops::load_dataset_dir(&a.data)?;
    let (model, metadata) = ops::fit_model(&training, keep)?;
    save_model(&a.out, &model, &metadata)?;
    print_json(&serde_json::json!({
        "model": a.out,
        "num_components": model.num_components(),
        "n_meshes": training.len(),
        "topology_hash": model.topology().hash(),
    }));
    Ok(())
}

fn sample(a: SampleArgs) -> ApiResult<()> {
    let (model, _) = load_model(&a.model)?;
    let req = SampleRequest {
        seed: a.seed,
        weights: a.weights,
        cohort: a.cohort,
    };
    match &a.shapemap {
        Some(map) => {
            let art = ops::sample_artifacts(&model, &req, a.res)?;
            write(&a.out, &art.obj)?;
            write_shapemap(map, &art.shape_map)
        }
        None => write(&a.out, &ops::obj_bytes(&ops::sample_mesh(&model, &req)?)),
    }
}

fn interpolate(a: InterpolateArgs) -> ApiResult<()> {
    let (model, _) = load_model(&a.model)?;
    let mesh = ops::interpolate_mesh(&model, a.from, a.to, a.alpha)?;
    write(&a.out, &ops::obj_bytes(&mesh))
}

fn shapemap(a: ShapemapArgs) -> ApiResult<()> {
    let mesh = Mesh::read_path(&a.mesh)?;
    let layout: Option<UnwrapResult> = match a.uv {
        UvMode::Cylindrical => Some(cylindrical_unwrap(&mesh)?),
        UvMode::Mesh => None,
        UvMode::MeshCylindrical => {
            let uvs = mesh
                .uvs()
                .ok_or_else(|| ApiError::bad_request("mesh has no texture coordinates"))?;
            Some(UnwrapResult::from_uvs(uvs.to_vec(), mesh.faces()))
        }
    };
    let source = layout.as_ref().map_or(UvSource::Mesh, UvSource::Cylindrical);
    write_shapemap(&a.out, &ops::shape_map_files(&mesh, source, a.res)?)
}

fn recolor(a: RecolorArgs) -> ApiResult<()> {
    let albedo = read(&a.albedo)?;
    let mask = a.mask.as_deref().map(read).transpose()?;
    let target: SemanticColorMap = serde_json::from_slice(&read(&a.target)?)
        .map_err(|e| ApiError::bad_request(format!("{}: {e}", a.target.display())))?;
    write(&a.out, &ops::recolor_png(&albedo, mask.as_deref(), &target)?)
}

fn metrics(a: MetricsArgs) -> ApiResult<()> {
    let gen = ops::load_mesh_dir(&a.generated)?;
    let real = ops::load_mesh_dir(&a.real)?;
    let cfg = MetricsConfig {
        tau: a.tau,
        diagonal_mode: a.mode.into(),
        ..MetricsConfig::default()
    };
    let report = ops::metrics_report(&gen, &real, &cfg)?;
    match &a.report {
        Some(p) => write(p, report.to_json_pretty().as_bytes()),
        None => {
            println!("{}", report.to_json_pretty());
            Ok(())
        }
    }
}

fn synth(a: SynthArgs) -> ApiResult<()> {
    let spec: DatasetSpec = match &a.spec {
        Some(p) => {
            serde_json::from_slice(&read(p)?).map_err(|e| ApiError::bad_request(format!("{}: {e}", p.display())))?
        }
        None => DatasetSpec::default(),
    };
    let samples = synthesize_cohort_dataset(&spec, Execution::Parallel)?;
    if a.holdout >= samples.len() {
        return Err(ApiError::bad_request(format!(
            "holdout {} leaves no training samples out of {}",
            a.holdout,
            samples.len()
        )));
    }
    let mask = trace_default_mask(spec.albedo_resolution);
    let (train, test) = samples.split_at(samples.len() - a.holdout);
    ops::write_dataset(&a.out, train, &mask)?;
    if !test.is_empty() {
        ops::write_dataset(&a.out.join("holdout"), test, &mask)?;
    }
    print_json(&serde_json::json!({ "out": a.out, "train": train.len(), "holdout": test.len() }));
    Ok(())
}

fn serve(a: ServeArgs) -> ApiResult<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(crate::service::serve(&a.data_root, SocketAddr::new(a.host, a.port)))?;
    Ok(())
}

pub fn execute(cli: Cli) -> ApiResult<()> {
    match cli.command {
        Command::Fit(a) => fit(a),
        Command::Sample(a) => sample(a),
        Command::Interpolate(a) => interpolate(a),
        Command::Shapemap(a) => shapemap(a),
        Command::Recolor(a) => recolor(a),
        Command::Metrics(a) => metrics(a),
        Command::Synth(a) => synth(a),
        Command::Serve(a) => serve(a),
    }
}

pub fn run() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", serde_json::to_string(&e).unwrap_or_else(|_| e.to_string()));
            ExitCode::FAILURE
        }
    }
}
