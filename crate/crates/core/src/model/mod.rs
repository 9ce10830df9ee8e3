//! Linear shape model: mean plus principal components, with demographic
//! offsets layered on top.
//!
//! New geometry is `mean + sum_i w_i * component_i`. Random weights are
//! `w_i = z_i * scale_i` with `z_i` standard normal and `scale_i` the sample
//! standard deviation of the training projections on component `i`. A
//! cohort offset (the mean displacement of the cohort's training shapes from
//! the global mean) is added afterwards.
//!
//! All shapes handled by a model live in its normalized space; use
//! [`ShapeModel::normalize`] on raw meshes before projecting them and
//! [`NormalizationTransform::invert`] to return to input units.

mod attributes;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{fit_normalization, validate_topology, FlatShape, Mesh, NormalizationTransform, Topology};
use crate::rng::NormalSource;

pub use attributes::{encode_attributes, Age, AttributeLabel, AttributeValue, Cohort, Gender, Race};

/// How many principal components to retain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Keep {
    Components(usize),
    /// Smallest count whose cumulative variance reaches the fraction;
    /// `1.0` keeps every non-degenerate component.
    VarianceFraction(f64),
}

impl Default for Keep {
    fn default() -> Self {
        Keep::VarianceFraction(0.98)
    }
}

/// Mean displacement of a cohort from the global mean shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicOffset {
    pub cohort: Cohort,
    pub delta: FlatShape,
    pub support: usize,
}

impl DemographicOffset {
    pub fn negated(&self) -> Self {
        DemographicOffset {
            cohort: self.cohort,
            delta: FlatShape(self.delta.0.iter().map(|d| -d).collect()),
            support: self.support,
        }
    }
}

/// A single-group cohort mean offset used as an interpolation endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDirection {
    pub label: AttributeValue,
    pub vector: FlatShape,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleRequest {
    pub seed: u64,
    pub weights: Option<Vec<f64>>,
    pub cohort: Option<Cohort>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeModel {
    pub(crate) mean: FlatShape,
    /// Row-major `num_components x 3n`.
    pub(crate) components: Vec<f64>,
    pub(crate) scales: Vec<f64>,
    pub(crate) topology: Topology,
    pub(crate) normalization: NormalizationTransform,
    pub(crate) cohorts: Vec<DemographicOffset>,
}

fn check_topology(meshes: &[&Mesh], topology: &Topology) -> Result<()> {
    for (i, m) in meshes.iter().enumerate() {
        let report = validate_topology(m, topology);
        if !report.ok {
            return Err(Error::TopologyMismatch(format!(
                "mesh {i} ({}): {}",
                m.id(),
                report.to_json()
            )));
        }
    }
    Ok(())
}

impl ShapeModel {
    /// Fits normalization, mean, components and the table of cohort offsets.
    ///
    /// Components are the left singular vectors of the centered
    /// `3n x N` data matrix, ordered by decreasing singular value, with the
    /// sign chosen so that each component's largest-magnitude entry is
    /// positive. Directions whose singular value is below `1e-9` of the
    /// largest are treated as zero variance and never kept.
    pub fn fit(training: &[(Mesh, AttributeLabel)], keep: Keep) -> Result<ShapeModel> {
        if training.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: training.len(),
            });
        }
        let topology = Topology::from_mesh(&training[0].0);
        let meshes: Vec<&Mesh> = training.iter().map(|(m, _)| m).collect();
        check_topology(&meshes, &topology)?;
        let owned: Vec<Mesh> = meshes.iter().map(|m| (*m).clone()).collect();
        let normalization = fit_normalization(&owned)?;

        let flats: Vec<FlatShape> = meshes.iter().map(|m| normalization.apply_flat(&m.flatten())).collect();
        let n = flats.len();
        let dim = flats[0].len();
        let mean = mean_shape(&flats);

        let centered = DMatrix::from_fn(dim, n, |r, c| flats[c].0[r] - mean.0[r]);
        let svd = centered.clone().svd(true, false);
        let u = svd.u.as_ref().expect("left singular vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let s_max = order.first().map_or(0.0, |&i| svd.singular_values[i]);
        let rank = order
            .iter()
            .take_while(|&&i| s_max > 0.0 && svd.singular_values[i] > s_max * 1e-9)
            .count()
            .min(n - 1);

        let variances: Vec<f64> = order[..rank].iter().map(|&i| svd.singular_values[i].powi(2)).collect();
        let kept = match keep {
            Keep::Components(k) if k > rank => {
                return Err(Error::KeepExceedsRank {
                    requested: k,
                    available: rank,
                })
            }
            Keep::Components(k) => k,
            Keep::VarianceFraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::OutOfRange(format!("variance fraction {f} not in (0, 1]")))
            }
            Keep::VarianceFraction(f) if f >= 1.0 => rank,
            Keep::VarianceFraction(f) => {
                let total: f64 = variances.iter().sum();
                let mut cum = 0.0;
                variances
                    .iter()
                    .position(|v| {
                        cum += v;
                        cum >= f * total
                    })
                    .map_or(rank, |p| p + 1)
            }
        };

        let mut components = Vec::with_capacity(kept * dim);
        for &col in &order[..kept] {
            let column = u.column(col);
            let pivot = column
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            components.extend(column.iter().map(|x| sign * x));
        }

        let scales: Vec<f64> = (0..kept)
            .map(|k| {
                let comp = &components[k * dim..(k + 1) * dim];
                let proj: Vec<f64> = flats.iter().map(|f| dot_centered(&f.0, &mean.0, comp)).collect();
                let m = proj.iter().sum::<f64>() / n as f64;
                (proj.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            })
            .collect();

        let mut model = ShapeModel {
            mean,
            components,
            scales,
            topology,
            normalization,
            cohorts: Vec::new(),
        };
        for cohort in Cohort::all() {
            if training.iter().any(|(_, l)| cohort.matches(l)) {
                let offset = compute_demographic_offset(&model, training, cohort)?;
                model.cohorts.push(offset);
            }
        }
        Ok(model)
    }

    pub fn mean(&self) -> &FlatShape {
        &self.mean
    }

    pub fn mean_mesh(&self) -> Mesh {
        self.mesh_from_flat(self.mean.clone())
    }

    pub fn num_components(&self) -> usize {
        self.scales.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn component(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.components[i * d..(i + 1) * d]
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn normalization(&self) -> &NormalizationTransform {
        &self.normalization
    }

    pub fn cohorts(&self) -> &[DemographicOffset] {
        &self.cohorts
    }

    /// Looks up a precomputed cohort offset.
    pub fn offset(&self, cohort: &Cohort) -> Result<&DemographicOffset> {
        self.cohorts
            .iter()
            .find(|o| &o.cohort == cohort)
            .ok_or_else(|| Error::UnknownCohort(cohort.to_string()))
    }

    /// Single-group cohort offset from the stored table.
    pub fn direction(&self, label: AttributeValue) -> Result<AttributeDirection> {
        let offset = self.offset(&label.cohort())?;
        Ok(AttributeDirection {
            label,
            vector: offset.delta.clone(),
        })
    }

    /// Maps a raw mesh into the model's normalized space.
    pub fn normalize(&self, mesh: &Mesh) -> Mesh {
        self.normalization.apply(mesh)
    }

    /// Largest absolute deviation of `Cᵀ C` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let k = self.num_components();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in i..k {
                let d: f64 = self
                    .component(i)
                    .iter()
                    .zip(self.component(j))
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }

    fn mesh_from_flat(&self, flat: FlatShape) -> Mesh {
        flat.unflatten(&self.topology)
            .expect("model shapes match the model topology")
    }

    /// `mean + sum_i weights[i] * component_i`.
    pub fn combine(&self, weights: &[f64]) -> Result<FlatShape> {
        if weights.len() != self.num_components() {
            return Err(Error::DimensionMismatch {
                expected: self.num_components(),
                found: weights.len(),
            });
        }
        let mut out = self.mean.0.clone();
        for (i, &w) in weights.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(self.component(i)) {
                *o += w * c;
            }
        }
        Ok(FlatShape(out))
    }

    /// Weights `z_i * scale_i` from the seeded normal stream.
    pub fn random_weights(&self, seed: u64) -> Vec<f64> {
        let mut src = NormalSource::new(seed);
        self.scales.iter().map(|s| src.standard_normal() * s).collect()
    }

    pub fn sample(&self, req: &SampleRequest) -> Result<Mesh> {
        let weights = match &req.weights {
            Some(w) => w.clone(),
            None => self.random_weights(req.seed),
        };
        let mesh = self.mesh_from_flat(self.combine(&weights)?);
        match &req.cohort {
            Some(c) => apply_offset(&mesh, self.offset(c)?),
            None => Ok(mesh),
        }
    }

    /// Coefficients `Cᵀ (flat(mesh) - mean)` of a mesh in model space.
    pub fn project(&self, mesh: &Mesh) -> Result<Vec<f64>> {
        let report = validate_topology(mesh, &self.topology);
        if !report.ok {
            return Err(Error::TopologyMismatch(report.to_json()));
        }
        let flat = mesh.flatten();
        Ok((0..self.num_components())
            .map(|i| dot_centered(&flat.0, &self.mean.0, self.component(i)))
            .collect())
    }

    /// Evaluates `mean + ((1 - alpha) * s1 + alpha * s2)`.
    pub fn interpolate(&self, s1: &AttributeDirection, s2: &AttributeDirection, alpha: f64) -> Result<Mesh> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::OutOfRange(format!("alpha {alpha} not in [0, 1]")));
        }
        for s in [s1, s2] {
            if s.vector.len() != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    found: s.vector.len(),
                });
            }
        }
        let out = self
            .mean
            .0
            .iter()
            .zip(&s1.vector.0)
            .zip(&s2.vector.0)
            .map(|((m, a), b)| m + ((1.0 - alpha) * a + alpha * b))
            .collect();
        Ok(self.mesh_from_flat(FlatShape(out)))
    }
}

fn dot_centered(x: &[f64], mean: &[f64], dir: &[f64]) -> f64 {
    x.iter().zip(mean).zip(dir).map(|((x, m), d)| (x - m) * d).sum()
}

fn mean_shape(flats: &[FlatShape]) -> FlatShape {
    let dim = flats[0].len();
    let mut acc = vec![0.0; dim];
    for f in flats {
        for (a, x) in acc.iter_mut().zip(&f.0) {
            *a += x;
        }
    }
    let n = flats.len() as f64;
    FlatShape(acc.into_iter().map(|a| a / n).collect())
}

/// `(1/|S|) * sum_i (S_i - mean)` over the training shapes in `cohort`,
/// after mapping them into the model's normalized space.
pub fn compute_demographic_offset(
    model: &ShapeModel,
    training: &[(Mesh, AttributeLabel)],
    cohort: Cohort,
) -> Result<DemographicOffset> {
    let members: Vec<&Mesh> = training
        .iter()
        .filter(|(_, l)| cohort.matches(l))
        .map(|(m, _)| m)
        .collect();
    if members.is_empty() {
        return Err(Error::EmptyCohort(cohort.to_string()));
    }
    check_topology(&members, &model.topology)?;
    let mut acc = vec![0.0; model.dim()];
    for m in &members {
        let flat = model.normalization.apply_flat(&m.flatten());
        for ((a, x), mu) in acc.iter_mut().zip(&flat.0).zip(&model.mean.0) {
            *a += x - mu;
        }
    }
    let support = members.len();
    Ok(DemographicOffset {
        cohort,
        delta: FlatShape(acc.into_iter().map(|a| a / support as f64).collect()),
        support,
    })
}

/// Vertex-wise `mesh + offset`.
pub fn apply_offset(mesh: &Mesh, offset: &DemographicOffset) -> Result<Mesh> {
    let mut flat = mesh.flatten();
    if flat.len() != offset.delta.len() {
        return Err(Error::DimensionMismatch {
            expected: flat.len(),
            found: offset.delta.len(),
        });
    }
    for (x, d) in flat.0.iter_mut().zip(&offset.delta.0) {
        *x += d;
    }
    mesh.with_flat(&flat)
}

/// Single-group marginal of [`compute_demographic_offset`].
pub fn attribute_direction(
    model: &ShapeModel,
    training: &[(Mesh, AttributeLabel)],
    label: AttributeValue,
) -> Result<AttributeDirection> {
    let offset = compute_demographic_offset(model, training, label.cohort())?;
    Ok(AttributeDirection {
        label,
        vector: offset.delta,
    })
}
