//! Distance-based metrics over sets of generated and real shapes.
//!
//! The distance between two shapes is the Euclidean norm of the difference
//! of their stacked vertex coordinates (the square root of the sum over all
//! vertices and axes of squared differences). On top of the distance
//! matrices:
//!
//! * diversity: mean over generated rows of the mean distance to the other
//!   generated samples;
//! * specificity: mean over generated rows of the mean distance to the real
//!   samples;
//! * tau: mean over real samples of the distance to the nearest other real
//!   sample;
//! * uniqueness: percentage of generated samples whose nearest other
//!   generated sample is at least tau away;
//! * novelty: percentage of generated samples whose nearest real sample is
//!   at least tau away;
//! * performance: percentage of generated samples that are both.
//!
//! Distances are accumulated in `f64`. Row blocks of the distance kernel may
//! run in parallel; every reduction runs in row-major order afterwards, so
//! results do not depend on the schedule.

use base64::Engine as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::{FlatShape, Mesh};

/// Columns of `B` processed together while a block of `A` rows is hot.
const COL_TILE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetRole {
    Generated,
    Real,
}

/// `N` shapes of a common dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    data: Vec<f64>,
    pub role: SetRole,
}

impl SampleSet {
    pub fn from_rows(dim: usize, data: Vec<f64>, role: SetRole) -> Result<Self> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len(),
            });
        }
        Ok(SampleSet { dim, data, role })
    }

    pub fn from_shapes(shapes: &[FlatShape], role: SetRole) -> Result<Self> {
        let dim = shapes
            .first()
            .map(FlatShape::len)
            .ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
        let mut data = Vec::with_capacity(dim * shapes.len());
        for s in shapes {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.len(),
                });
            }
            data.extend_from_slice(s.as_slice());
        }
        Self::from_rows(dim, data, role)
    }

    pub fn from_meshes(meshes: &[Mesh], role: SetRole) -> Result<Self> {
        let shapes: Vec<FlatShape> = meshes.iter().map(Mesh::flatten).collect();
        Self::from_shapes(&shapes, role)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    Inter,
    Intra,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub mode: DistanceMode,
}

impl DistanceMatrix {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }
}

/// How self-pairs enter the diversity average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalMode {
    /// Average over `j != i` only.
    #[default]
    ExcludeSelf,
    /// Average over all `N` columns, zero diagonal included.
    PaperLiteral,
}

impl std::str::FromStr for DiagonalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exclude_self" => Ok(Self::ExcludeSelf),
            "paper_literal" => Ok(Self::PaperLiteral),
            other => Err(Error::OutOfRange(format!("unknown diagonal mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig {
    pub tau: Option<f64>,
    pub diagonal_mode: DiagonalMode,
    /// Rows of the first set per kernel tile.
    pub block_size: usize,
    pub exec: Execution,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            tau: None,
            diagonal_mode: DiagonalMode::ExcludeSelf,
            block_size: 64,
            exec: Execution::Parallel,
        }
    }
}

fn same_dim(a: &SampleSet, b: &SampleSet) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    // four independent partial sums; order is fixed, so the result is
    // deterministic
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            let d = x[k] - y[k];
            acc[k] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = x - y;
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn mode_of(a: &SampleSet, b: &SampleSet) -> DistanceMode {
    if std::ptr::eq(a, b) {
        DistanceMode::Intra
    } else {
        DistanceMode::Inter
    }
}

/// Cache-blocked distance matrix: tiles of `cfg.block_size` rows of `a`
/// against column tiles of `b`.
pub fn distance_matrix(a: &SampleSet, b: &SampleSet, cfg: &MetricsConfig) -> Result<DistanceMatrix> {
    same_dim(a, b)?;
    let (rows, cols) = (a.len(), b.len());
    let block = cfg.block_size.max(1);
    let mut values = vec![0.0; rows * cols];
    cfg.exec.for_each_chunk_mut(&mut values, block * cols, |bi, out| {
        let r0 = bi * block;
        let nr = out.len() / cols;
        for c0 in (0..cols).step_by(COL_TILE) {
            let c1 = (c0 + COL_TILE).min(cols);
            for r in 0..nr {
                let ra = a.row(r0 + r);
                for c in c0..c1 {
                    out[r * cols + c] = sq_dist(ra, b.row(c)).sqrt();
                }
            }
        }
    });
    Ok(DistanceMatrix {
        rows,
        cols,
        values,
        mode: mode_of(a, b),
    })
}

/// Reference kernel: one sequential accumulator per pair.
pub fn distance_matrix_naive(a: &SampleSet, b: &SampleSet) -> Result<DistanceMatrix> {
    same_dim(a, b)?;
    let mut values = Vec::with_capacity(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            let s: f64 = a.row(i).iter().zip(b.row(j)).map(|(x, y)| (x - y) * (x - y)).sum();
            values.push(s.sqrt());
        }
    }
    Ok(DistanceMatrix {
        rows: a.len(),
        cols: b.len(),
        values,
        mode: mode_of(a, b),
    })
}

fn need(n: usize, needed: usize) -> Result<()> {
    if n < needed {
        return Err(Error::TooFewSamples { needed, got: n });
    }
    Ok(())
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Diversity from a precomputed generated-vs-generated matrix.
pub fn diversity_from(intra_gen: &DistanceMatrix, mode: DiagonalMode) -> Result<f64> {
    let n = intra_gen.rows;
    need(n, 2)?;
    Ok(mean((0..n).map(|i| {
        let row = intra_gen.row(i);
        match mode {
            DiagonalMode::ExcludeSelf => {
                row.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, d)| d)
                    .sum::<f64>()
                    / (n - 1) as f64
            }
            DiagonalMode::PaperLiteral => row.iter().sum::<f64>() / n as f64,
        }
    })))
}

pub fn specificity_from(inter: &DistanceMatrix) -> Result<f64> {
    need(inter.rows, 1)?;
    need(inter.cols, 1)?;
    Ok(mean(
        (0..inter.rows).map(|i| inter.row(i).iter().sum::<f64>() / inter.cols as f64),
    ))
}

/// Nearest-neighbour distance of each row, skipping the diagonal when
/// `exclude_diagonal` is set.
fn row_minima(m: &DistanceMatrix, exclude_diagonal: bool) -> Vec<f64> {
    (0..m.rows)
        .map(|i| {
            m.row(i)
                .iter()
                .enumerate()
                .filter(|&(j, _)| !(exclude_diagonal && j == i))
                .map(|(_, &d)| d)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn tau_from(intra_real: &DistanceMatrix) -> Result<f64> {
    need(intra_real.rows, 2)?;
    Ok(mean(row_minima(intra_real, true).into_iter()))
}

fn percent(bits: &[bool]) -> f64 {
    100.0 * bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64
}

pub fn uniqueness_from(intra_gen: &DistanceMatrix, tau: f64) -> Result<(f64, Vec<bool>)> {
    need(intra_gen.rows, 2)?;
    check_tau(tau)?;
    let alpha: Vec<bool> = row_minima(intra_gen, true).into_iter().map(|d| d >= tau).collect();
    Ok((percent(&alpha), alpha))
}

pub fn novelty_from(inter: &DistanceMatrix, tau: f64) -> Result<(f64, Vec<bool>)> {
    need(inter.rows, 1)?;
    need(inter.cols, 1)?;
    check_tau(tau)?;
    let beta: Vec<bool> = row_minima(inter, false).into_iter().map(|d| d >= tau).collect();
    Ok((percent(&beta), beta))
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0) {
        return Err(Error::OutOfRange(format!("tau {tau} must be non-negative")));
    }
    Ok(())
}

pub fn diversity(gen: &SampleSet, cfg: &MetricsConfig) -> Result<f64> {
    need(gen.len(), 2)?;
    diversity_from(&distance_matrix(gen, gen, cfg)?, cfg.diagonal_mode)
}

pub fn specificity(gen: &SampleSet, real: &SampleSet, cfg: &MetricsConfig) -> Result<f64> {
    specificity_from(&distance_matrix(gen, real, cfg)?)
}

pub fn threshold_tau(real: &SampleSet, cfg: &MetricsConfig) -> Result<f64> {
    need(real.len(), 2)?;
    tau_from(&distance_matrix(real, real, cfg)?)
}

pub fn uniqueness(gen: &SampleSet, tau: f64, cfg: &MetricsConfig) -> Result<(f64, Vec<bool>)> {
    need(gen.len(), 2)?;
    uniqueness_from(&distance_matrix(gen, gen, cfg)?, tau)
}

pub fn novelty(gen: &SampleSet, real: &SampleSet, tau: f64, cfg: &MetricsConfig) -> Result<(f64, Vec<bool>)> {
    novelty_from(&distance_matrix(gen, real, cfg)?, tau)
}

/// `to_keep = alpha AND beta`, as a percentage of all generated samples.
pub fn performance(alpha: &[bool], beta: &[bool]) -> Result<(f64, Vec<bool>)> {
    if alpha.len() != beta.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.len(),
            found: beta.len(),
        });
    }
    need(alpha.len(), 1)?;
    let keep: Vec<bool> = alpha.iter().zip(beta).map(|(&a, &b)| a && b).collect();
    Ok((percent(&keep), keep))
}

/// Per-sample decision bits, serialized as base64 bitsets (bit `i` is bit
/// `i % 8` of byte `i / 8`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFlags {
    #[serde(with = "bitset")]
    pub alpha: Vec<bool>,
    #[serde(with = "bitset")]
    pub beta: Vec<bool>,
    #[serde(with = "bitset")]
    pub to_keep: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub diversity: f64,
    pub specificity: f64,
    pub tau: f64,
    pub uniqueness_pct: f64,
    pub novelty_pct: f64,
    pub performance_pct: f64,
    pub n_generated: usize,
    pub n_real: usize,
    pub diagonal_mode: DiagonalMode,
    pub flags: MetricFlags,
}

impl MetricsReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn evaluate_all(gen: &SampleSet, real: &SampleSet, cfg: &MetricsConfig) -> Result<MetricsReport> {
    same_dim(gen, real)?;
    need(real.len(), 2)?;
    need(gen.len(), 2)?;
    let intra_gen = distance_matrix(gen, gen, cfg)?;
    let inter = distance_matrix(gen, real, cfg)?;
    let tau = match cfg.tau {
        Some(t) => {
            check_tau(t)?;
            t
        }
        None => tau_from(&distance_matrix(real, real, cfg)?)?,
    };
    let (uniqueness_pct, alpha) = uniqueness_from(&intra_gen, tau)?;
    let (novelty_pct, beta) = novelty_from(&inter, tau)?;
    let (performance_pct, to_keep) = performance(&alpha, &beta)?;
    Ok(MetricsReport {
        diversity: diversity_from(&intra_gen, cfg.diagonal_mode)?,
        specificity: specificity_from(&inter)?,
        tau,
        uniqueness_pct,
        novelty_pct,
        performance_pct,
        n_generated: gen.len(),
        n_real: real.len(),
        diagonal_mode: cfg.diagonal_mode,
        flags: MetricFlags { alpha, beta, to_keep },
    })
}

pub mod bitset {
    use super::*;

    pub fn encode(bits: &[bool]) -> String {
        let mut bytes = vec![0u8; bits.len().div_ceil(8)];
        for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            bytes[i / 8] |= 1 << (i % 8);
        }
        base64::engine::general_purpose::STANDARD.encode(bytes)
    }

    pub fn decode(s: &str, len: usize) -> Result<Vec<bool>> {
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(s)
            .map_err(|e| Error::OutOfRange(e.to_string()))?;
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::DimensionMismatch {
                expected: len.div_ceil(8),
                found: bytes.len(),
            });
        }
        Ok((0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect())
    }

    #[derive(Serialize, Deserialize)]
    struct Wire {
        len: usize,
        bits: String,
    }

    pub fn serialize<S: Serializer>(bits: &[bool], s: S) -> std::result::Result<S::Ok, S::Error> {
        Wire {
            len: bits.len(),
            bits: encode(bits),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<bool>, D::Error> {
        let w = Wire::deserialize(d)?;
        decode(&w.bits, w.len).map_err(serde::de::Error::custom)
    }
}
