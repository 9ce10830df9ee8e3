//! Brute-force metric definitions written straight from the formulas: plain
//! double loops, one accumulator, no blocking and no shared helpers with the
//! library kernels.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveReport {
    pub diversity: f64,
    pub specificity: f64,
    pub tau: f64,
    pub uniqueness_pct: f64,
    pub novelty_pct: f64,
    pub performance_pct: f64,
    pub alpha: Vec<bool>,
    pub beta: Vec<bool>,
    pub to_keep: Vec<bool>,
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

/// Nearest neighbour of `x` in `set`, skipping index `skip`.
fn nearest(x: &[f64], set: &[Vec<f64>], skip: Option<usize>) -> f64 {
    let mut best = f64::INFINITY;
    for (j, y) in set.iter().enumerate() {
        if Some(j) != skip {
            best = best.min(dist(x, y));
        }
    }
    best
}

/// All six metrics. `paper_literal` keeps the zero self-distance in the
/// diversity average.
pub fn report(gen: &[Vec<f64>], real: &[Vec<f64>], paper_literal: bool, tau: Option<f64>) -> NaiveReport {
    let ng = gen.len();
    let nr = real.len();

    let mut diversity = 0.0;
    for i in 0..ng {
        let mut row = 0.0;
        for j in 0..ng {
            if i != j {
                row += dist(&gen[i], &gen[j]);
            }
        }
        diversity += if paper_literal {
            row / ng as f64
        } else {
            row / (ng - 1) as f64
        };
    }
    diversity /= ng as f64;

    let mut specificity = 0.0;
    for g in gen {
        let mut row = 0.0;
        for r in real {
            row += dist(g, r);
        }
        specificity += row / nr as f64;
    }
    specificity /= ng as f64;

    let tau = tau.unwrap_or_else(|| {
        let mut t = 0.0;
        for i in 0..nr {
            t += nearest(&real[i], real, Some(i));
        }
        t / nr as f64
    });

    let alpha: Vec<bool> = (0..ng).map(|i| nearest(&gen[i], gen, Some(i)) >= tau).collect();
    let beta: Vec<bool> = gen.iter().map(|g| nearest(g, real, None) >= tau).collect();
    let to_keep: Vec<bool> = (0..ng).map(|i| alpha[i] && beta[i]).collect();
    let pct = |bits: &[bool]| 100.0 * bits.iter().filter(|b| **b).count() as f64 / ng as f64;

    NaiveReport {
        diversity,
        specificity,
        tau,
        uniqueness_pct: pct(&alpha),
        novelty_pct: pct(&beta),
        performance_pct: pct(&to_keep),
        alpha,
        beta,
        to_keep,
    }
}

/// A random metric instance: `(gen, real, dim)` with `2..=max_n` rows each
/// and `1..=max_v` vertices per row.
pub fn random_instance(rng: &mut impl Rng, max_n: usize, max_v: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, usize) {
    let dim = 3 * rng.random_range(1..=max_v);
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    let ng = rng.random_range(2..=max_n);
    let nr = rng.random_range(2..=max_n);
    let mut rows = |n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect())
            .collect()
    };
    let mut gen = rows(ng);
    let real = rows(nr);
    // occasional duplicates and shared rows exercise zero distances
    if rng.random_bool(0.3) {
        let j = rng.random_range(0..ng);
        gen[0] = gen[j].clone();
    }
    if rng.random_bool(0.3) {
        gen[ng - 1] = real[rng.random_range(0..nr)].clone();
    }
    (gen, real, dim)
}

pub fn flatten(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}
