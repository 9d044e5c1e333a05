// SPDX-License-Identifier: MIT OR Apache-2.0

//! Lloyd's K-Means with k-means++ seeding and optional per-feature weights.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, weighted_squared_distance, Matrix};
use crate::seed::{self, Stage};

pub const MAX_LLOYD_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Matrix,
    pub labels: Vec<usize>,
    /// Final within-cluster (weighted) sum of squares.
    pub inertia: f64,
    /// Objective after each assignment step.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[inline]
fn dist(a: &[f64], b: &[f64], w: Option<&[f64]>) -> f64 {
    match w {
        Some(w) => weighted_squared_distance(a, b, w),
        None => squared_distance(a, b),
    }
}

/// Plain K-Means: best of `n_restarts` k-means++ starts by inertia.
pub fn kmeans(x: &Matrix, k: usize, seed: u64, n_restarts: usize) -> Result<KMeansFit> {
    best_of_restarts(x, k, None, seed, n_restarts)
}

pub(crate) fn best_of_restarts(
    x: &Matrix,
    k: usize,
    weights: Option<&[f64]>,
    seed: u64,
    n_restarts: usize,
) -> Result<KMeansFit> {
    check_k(x, k)?;
    let mut best: Option<KMeansFit> = None;
    for r in 0..n_restarts.max(1) {
        let mut rng = seed::derived_rng(seed, Stage::KMeansRestart, r as u64);
        let init = kmeans_plus_plus(x, k, weights, &mut rng);
        let fit = lloyd(x, init, weights);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

pub(crate) fn check_k(x: &Matrix, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::parameter("cluster count must be at least 1"));
    }
    if k > x.rows() {
        return Err(Error::size(format!(
            "cluster count {k} exceeds point count {}",
            x.rows()
        )));
    }
    Ok(())
}

/// k-means++ seeding. Candidates are drawn with probability proportional to
/// their distance to the nearest chosen centroid.
pub(crate) fn kmeans_plus_plus(
    x: &Matrix,
    k: usize,
    weights: Option<&[f64]>,
    rng: &mut ChaCha8Rng,
) -> Matrix {
    let n = x.rows();
    let mut centroids = Matrix::zeros(k, x.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(x.row(first));
    let mut nearest: Vec<f64> = x.iter_rows().map(|r| dist(r, x.row(first), weights)).collect();

    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding can leave `target` just above the final sum.
            chosen.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(x.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            let nd = dist(x.row(i), x.row(pick), weights);
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

fn assign(
    x: &Matrix,
    centroids: &Matrix,
    weights: Option<&[f64]>,
    labels: &mut [usize],
    costs: &mut [f64],
) -> f64 {
    let mut total = 0.0;
    for (i, row) in x.iter_rows().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, cen) in centroids.iter_rows().enumerate() {
            let d = dist(row, cen, weights);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels[i] = best;
        costs[i] = best_d;
        total += best_d;
    }
    total
}

/// Lloyd iterations from the given centroids until the assignment stops
/// changing or the iteration cap is hit. Centroids are unweighted means.
pub(crate) fn lloyd(x: &Matrix, mut centroids: Matrix, weights: Option<&[f64]>) -> KMeansFit {
    let n = x.rows();
    let k = centroids.rows();
    let p = x.cols();
    let mut labels = vec![usize::MAX; n];
    let mut prev = vec![usize::MAX; n];
    let mut costs = vec![0.0; n];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..MAX_LLOYD_ITERATIONS {
        iterations += 1;
        let objective = assign(x, &centroids, weights, &mut labels, &mut costs);
        trace.push(objective);
        if labels == prev {
            converged = true;
            break;
        }

        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        // Reseed empty clusters with the point farthest from its centroid.
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[labels[i]] > 1)
                    .max_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(b.cmp(&a)));
                if let Some(i) = far {
                    counts[labels[i]] -= 1;
                    labels[i] = c;
                    counts[c] = 1;
                    costs[i] = 0.0;
                }
            }
        }

        let mut sums = Matrix::zeros(k, p);
        for (i, row) in x.iter_rows().enumerate() {
            for (s, v) in sums.row_mut(labels[i]).iter_mut().zip(row) {
                *s += v;
            }
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let inv = 1.0 / count as f64;
                for (dst, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
        prev.copy_from_slice(&labels);
    }

    let inertia = *trace.last().unwrap_or(&0.0);
    KMeansFit {
        centroids,
        labels,
        inertia,
        objective_trace: trace,
        iterations,
        converged,
    }
}

/// Within-cluster sum of (weighted) squared distances for a given labelling.
pub fn objective(x: &Matrix, centroids: &Matrix, labels: &[usize], weights: Option<&[f64]>) -> f64 {
    x.iter_rows()
        .zip(labels)
        .map(|(r, &l)| dist(r, centroids.row(l), weights))
        .sum()
}
