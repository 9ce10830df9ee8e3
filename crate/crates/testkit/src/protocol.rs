//! The seeded desk-scale evaluation protocol: 104 synthetic heads split
//! 94/10, a model fitted on the 94, and 1000 samples scored against the 10.

use headforge_core::mesh::{FlatShape, Mesh};
use headforge_core::metrics::{evaluate_all, MetricsConfig, MetricsReport, SampleSet, SetRole};
use headforge_core::model::{AttributeLabel, Cohort, Keep, SampleRequest, ShapeModel};
use headforge_core::synth::{planted_displacements, synthesize_cohort_dataset, DatasetSpec, SynthSample};
use headforge_core::{Execution, Result};

pub const TEST_SIZE: usize = 10;
pub const GENERATED: usize = 1000;

/// Frozen report of [`golden_report`].
pub const GOLDEN_REPORT: &str = include_str!("../fixtures/golden_report.json");
pub const GOLDEN_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/golden_report.json");

pub struct Split {
    pub spec: DatasetSpec,
    pub train: Vec<SynthSample>,
    pub test: Vec<SynthSample>,
}

pub fn split(seed: u64) -> Result<Split> {
    let spec = DatasetSpec::with_seed(seed);
    let mut train = synthesize_cohort_dataset(&spec, Execution::Parallel)?;
    let test = train.split_off(train.len() - TEST_SIZE);
    Ok(Split { spec, train, test })
}

pub fn labelled(samples: &[SynthSample]) -> Vec<(Mesh, AttributeLabel)> {
    samples.iter().map(|s| (s.mesh.clone(), s.label)).collect()
}

pub fn fit(split: &Split) -> Result<ShapeModel> {
    ShapeModel::fit(&labelled(&split.train), Keep::default())
}

/// Scores `GENERATED` seeded samples against the held-out heads, both in the
/// model's normalized space.
pub fn golden_report(exec: Execution) -> Result<MetricsReport> {
    let split = split(0)?;
    let model = fit(&split)?;
    let generated = (0..GENERATED)
        .map(|i| {
            model.sample(&SampleRequest {
                seed: i as u64,
                ..Default::default()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let real: Vec<Mesh> = split.test.iter().map(|s| model.normalize(&s.mesh)).collect();
    let cfg = MetricsConfig {
        exec,
        ..MetricsConfig::default()
    };
    evaluate_all(
        &SampleSet::from_meshes(&generated, SetRole::Generated)?,
        &SampleSet::from_meshes(&real, SetRole::Real)?,
        &cfg,
    )
}

/// The 24 fully specified cohorts.
pub fn full_cohorts() -> Vec<Cohort> {
    AttributeLabel::all().map(Cohort::from).collect()
}

/// Cosine between each fitted cohort offset and the planted displacement
/// of that cohort's training members, centered on the training mean.
pub fn recovery_cosines(seed: u64) -> Result<Vec<f64>> {
    let split = split(seed)?;
    let model = fit(&split)?;
    let planted = planted_displacements(&split.spec)?;
    let planted = &planted[..split.train.len()];
    let dim = planted[0].len();
    let mean_of = |idx: &[usize]| -> Vec<f64> {
        let mut m = vec![0.0; dim];
        for &i in idx {
            for (a, x) in m.iter_mut().zip(&planted[i].0) {
                *a += x;
            }
        }
        m.iter().map(|a| a / idx.len() as f64).collect()
    };
    let all: Vec<usize> = (0..planted.len()).collect();
    let global = mean_of(&all);
    full_cohorts()
        .into_iter()
        .map(|c| {
            let members: Vec<usize> = all
                .iter()
                .copied()
                .filter(|&i| c.matches(&split.train[i].label))
                .collect();
            let planted_offset: Vec<f64> = mean_of(&members).iter().zip(&global).map(|(a, g)| a - g).collect();
            Ok(crate::cosine(&model.offset(&c)?.delta.0, &planted_offset))
        })
        .collect()
}

/// Index of the cohort mean `mean + delta_c` nearest to `shape`.
pub fn nearest_cohort(model: &ShapeModel, cohorts: &[Cohort], shape: &FlatShape) -> Result<usize> {
    let mut best = (f64::INFINITY, 0);
    for (k, c) in cohorts.iter().enumerate() {
        let delta = &model.offset(c)?.delta.0;
        let d: f64 = shape
            .0
            .iter()
            .zip(&model.mean().0)
            .zip(delta)
            .map(|((x, m), o)| (x - m - o).powi(2))
            .sum();
        if d < best.0 {
            best = (d, k);
        }
    }
    Ok(best.1)
}

pub struct ArgmaxRates {
    /// Fresh synthetic heads of each cohort, classified by nearest cohort mean.
    pub fresh_draws: f64,
    /// Model samples displaced by a cohort offset, classified the same way.
    pub offset_samples: f64,
    pub draws: usize,
}

pub fn argmax_recovery(seed: u64, draws: usize) -> Result<ArgmaxRates> {
    let split = split(seed)?;
    let model = fit(&split)?;
    let cohorts = full_cohorts();

    let mut fresh_spec = DatasetSpec::with_seed(seed.wrapping_add(1 << 40));
    fresh_spec.cohorts = split
        .spec
        .resolved_cohorts()?
        .into_iter()
        .map(|mut c| {
            c.count = draws.div_ceil(cohorts.len());
            c
        })
        .collect();
    let fresh = synthesize_cohort_dataset(&fresh_spec, Execution::Parallel)?;
    let mut hits = 0;
    for s in fresh.iter().take(draws) {
        let k = nearest_cohort(&model, &cohorts, &model.normalize(&s.mesh).flatten())?;
        hits += usize::from(cohorts[k].matches(&s.label));
    }
    let fresh_draws = hits as f64 / draws as f64;

    let mut hits = 0;
    for i in 0..draws {
        let c = cohorts[i % cohorts.len()];
        let mesh = model.sample(&SampleRequest {
            seed: i as u64,
            weights: None,
            cohort: Some(c),
        })?;
        hits += usize::from(nearest_cohort(&model, &cohorts, &mesh.flatten())? == i % cohorts.len());
    }
    Ok(ArgmaxRates {
        fresh_draws,
        offset_samples: hits as f64 / draws as f64,
        draws,
    })
}
