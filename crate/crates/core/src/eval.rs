// SPDX-License-Identifier: MIT OR Apache-2.0

//! Accuracy scoring, replication studies, tail comparisons and kernel
//! density curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{run_pipeline, PipelineConfig};
use crate::seed::{self, Stage};
use crate::simgen::ScenarioSpec;
use crate::weighted_cluster::Method;

/// Fraction of matching positions under the better of the two label
/// alignments.
pub fn decoding_accuracy(est: &[usize], truth: &[usize]) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(Error::size(format!(
            "estimate has {} labels, truth has {}",
            est.len(),
            truth.len()
        )));
    }
    if est.is_empty() {
        return Err(Error::size("no labels to compare"));
    }
    if est.iter().chain(truth).any(|&l| l > 1) {
        return Err(Error::validation("accuracy is defined for two-state labels"));
    }
    let same = est.iter().zip(truth).filter(|(a, b)| a == b).count();
    let n = est.len();
    Ok(same.max(n - same) as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single replication.
    pub std: f64,
    pub n_reps: usize,
    pub per_rep: Vec<f64>,
}

impl AccuracyReport {
    pub fn from_values(per_rep: Vec<f64>) -> Result<Self> {
        let n = per_rep.len();
        if n == 0 {
            return Err(Error::size("no replications"));
        }
        let mean = per_rep.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (per_rep.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            std,
            n_reps: n,
            per_rep,
        })
    }
}

/// Simulate, decode and score one replication.
pub fn run_replication(spec: &ScenarioSpec, cfg: &PipelineConfig) -> Result<f64> {
    let data = spec.generate()?;
    let cfg = PipelineConfig {
        lag: spec.scenario.embedding_lag(),
        seed: spec.seed,
        ..*cfg
    };
    let out = run_pipeline(&data.series, &cfg)?;
    decoding_accuracy(&out.labels, &data.truth[..out.labels.len()])
}

/// `n_reps` independent replications of `spec` decoded with `method`.
///
/// Replication `i` uses seed `derive(seed, Replicate, i)` for both the
/// simulation and the pipeline.
pub fn replicate_experiment(
    spec: &ScenarioSpec,
    cfg: &PipelineConfig,
    method: Method,
    n_reps: usize,
    seed: u64,
) -> Result<AccuracyReport> {
    if n_reps == 0 {
        return Err(Error::parameter("n_reps must be at least 1"));
    }
    let cfg = PipelineConfig { method, ..*cfg };
    let per_rep = (0..n_reps as u64)
        .into_par_iter()
        .map(|i| {
            let rep_seed = seed::derive(seed, Stage::Replicate, i);
            run_replication(&spec.with_seed(rep_seed), &cfg).map_err(|e| Error::Replication {
                seed: rep_seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    AccuracyReport::from_values(per_rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub z: f64,
    pub sigma: f64,
    /// Fraction of `|x| > z sigma` within each state.
    pub tail_prob: [f64; 2],
    /// State with the larger tail mass at `z = 1`.
    pub volatile_state: usize,
    /// Volatile minus quiet tail probability.
    pub delta: f64,
}

fn tail_fraction(x: &[f64], labels: &[usize], state: usize, cut: f64) -> f64 {
    let (hits, total) = x
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == state)
        .fold((0usize, 0usize), |(h, t), (v, _)| (h + usize::from(v.abs() > cut), t + 1));
    hits as f64 / total as f64
}

/// Per-state probability of exceeding `z` pooled standard deviations.
pub fn heavy_tailedness(x: &[f64], labels: &[usize], z: f64) -> Result<TailReport> {
    if !(z >= 0.0) {
        return Err(Error::parameter(format!("z must be non-negative, got {z}")));
    }
    if x.len() != labels.len() {
        return Err(Error::size("series and label lengths differ"));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::validation("tail comparison expects two-state labels"));
    }
    for s in 0..2 {
        if !labels.contains(&s) {
            return Err(Error::Degenerate(format!("state {s} has no points")));
        }
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sigma = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let tail_prob = [
        tail_fraction(x, labels, 0, z * sigma),
        tail_fraction(x, labels, 1, z * sigma),
    ];
    let at_one = [tail_fraction(x, labels, 0, sigma), tail_fraction(x, labels, 1, sigma)];
    let volatile_state = usize::from(at_one[1] > at_one[0]);
    let delta = tail_prob[volatile_state] - tail_prob[1 - volatile_state];
    Ok(TailReport {
        z,
        sigma,
        tail_prob,
        volatile_state,
        delta,
    })
}

pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::size("density estimation needs at least 2 samples"));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sd = (samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
    if !(sd > 0.0) {
        return Err(Error::Degenerate("samples have zero variance".into()));
    }
    Ok(1.06 * sd * (n as f64).powf(-0.2))
}

/// Gaussian kernel density estimate evaluated at `grid`.
pub fn gaussian_kde(samples: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    let h = silverman_bandwidth(samples)?;
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .par_iter()
        .map(|&g| {
            norm * samples
                .iter()
                .map(|&s| {
                    let u = (g - s) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
        })
        .collect())
}

/// `n` evenly spaced points covering the samples plus three bandwidths on
/// each side.
pub fn kde_grid(samples: &[f64], n: usize) -> Result<Vec<f64>> {
    let h = silverman_bandwidth(samples)?;
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let n = n.max(2);
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}
