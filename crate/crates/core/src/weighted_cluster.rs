// SPDX-License-Identifier: MIT OR Apache-2.0

//! Feature-weighted K-Means over the rows of the feature matrix.
//!
//! Four relevance scores drive the weights:
//!
//! * `Fwsa`: between-cluster over within-cluster sum of squares per feature.
//! * `Nmi`: normalized mutual information between labels and each column.
//! * `Delta`: absolute difference of the ball's occupancy rate across the two
//!   clusters.
//! * `Entropy`: `exp(-H)` of the cluster-label mix inside each ball.
//!
//! Each iteration clusters with the current weights, scores the features, and
//! moves the weights a step `eta` toward the normalized scores.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::ballgen::{BallSet, FeatureMatrix};
use crate::error::{Error, Result};
use crate::hfs::Segmentation;
use crate::kmeans::{self, check_k, KMeansFit};
use crate::matrix::Matrix;
use crate::seed::{self, Stage};

const SCORE_EPS: f64 = 1e-12;

/// Non-negative feature weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn uniform(v: usize) -> Self {
        Self(vec![1.0 / v as f64; v])
    }

    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::size("weight vector is empty"));
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::validation("weights must be finite and non-negative"));
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("weights sum to {s}, expected 1")));
        }
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Fwsa,
    Nmi,
    Delta,
    Entropy,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Fwsa, Method::Nmi, Method::Delta, Method::Entropy];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fwsa => "FWSA",
            Self::Nmi => "NMI",
            Self::Delta => "DELTA",
            Self::Entropy => "ENTROPY",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fwsa" => Ok(Self::Fwsa),
            "nmi" => Ok(Self::Nmi),
            "delta" | "methoda" => Ok(Self::Delta),
            "entropy" | "methodb" => Ok(Self::Entropy),
            _ => Err(Error::parameter(format!(
                "unknown method {s:?} (expected fwsa|nmi|delta|entropy)"
            ))),
        }
    }
}

/// How mutual information is scaled into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NmiNormalization {
    /// `2 MI / (H(L) + H(Y))`
    #[default]
    Arithmetic,
    /// `MI / sqrt(H(L) H(Y))`
    Geometric,
    /// `MI / max(H(L), H(Y))`
    Max,
}

impl std::str::FromStr for NmiNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "arithmetic" => Ok(Self::Arithmetic),
            "geometric" => Ok(Self::Geometric),
            "max" => Ok(Self::Max),
            _ => Err(Error::parameter(format!(
                "unknown NMI normalization {s:?} (expected arithmetic|geometric|max)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub method: Method,
    pub k: usize,
    pub eta: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    /// k-means++ starts for the first (cold) clustering pass.
    pub n_init: usize,
    pub nmi_normalization: NmiNormalization,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            method: Method::Entropy,
            k: 2,
            eta: 0.5,
            max_iter: 50,
            tol: 1e-6,
            seed: 0,
            n_init: 5,
            nmi_normalization: NmiNormalization::Arithmetic,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::parameter(format!("k must be at least 2, got {}", self.k)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::parameter(format!("eta must lie in [0,1], got {}", self.eta)));
        }
        if self.method == Method::Delta && self.k != 2 {
            return Err(Error::parameter("the delta rule is defined for k = 2 only"));
        }
        if self.max_iter == 0 {
            return Err(Error::parameter("max_iter must be positive"));
        }
        Ok(())
    }
}

/// Weighted Lloyd iterations from k-means++ (or the supplied centroids).
pub fn weighted_kmeans(
    p: &FeatureMatrix,
    k: usize,
    w: &WeightVector,
    seed: u64,
    init_centroids: Option<&Matrix>,
) -> Result<KMeansFit> {
    weighted_kmeans_restarts(p, k, w, seed, init_centroids, 1)
}

fn weighted_kmeans_restarts(
    p: &FeatureMatrix,
    k: usize,
    w: &WeightVector,
    seed: u64,
    init_centroids: Option<&Matrix>,
    n_init: usize,
) -> Result<KMeansFit> {
    let x = &p.values;
    check_k(x, k)?;
    if w.len() != x.cols() {
        return Err(Error::size(format!(
            "{} weights for {} features",
            w.len(),
            x.cols()
        )));
    }
    match init_centroids {
        Some(c) => {
            if c.rows() != k || c.cols() != x.cols() {
                return Err(Error::size("initial centroids have the wrong shape"));
            }
            Ok(kmeans::lloyd(x, c.clone(), Some(w.as_slice())))
        }
        None => kmeans::best_of_restarts(x, k, Some(w.as_slice()), seed, n_init),
    }
}

fn normalize_scores(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        let v = raw.len();
        return vec![1.0 / v as f64; v];
    }
    raw.into_iter().map(|s| s / total).collect()
}

fn cluster_sizes(labels: &[usize], k: usize) -> Vec<usize> {
    let mut sizes = vec![0; k];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

fn n_clusters(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |m| m + 1)
}

/// Per-feature `b_v / (a_v + eps)` normalized to sum one, where `a_v` is the
/// within-cluster and `b_v` the between-cluster sum of squares.
pub fn fwsa_target(p: &FeatureMatrix, labels: &[usize], centroids: &Matrix) -> Result<Vec<f64>> {
    let x = &p.values;
    if labels.len() != x.rows() {
        return Err(Error::size("label count differs from feature rows"));
    }
    let k = centroids.rows();
    if labels.iter().any(|&l| l >= k) {
        return Err(Error::validation("label exceeds centroid count"));
    }
    let v = x.cols();
    let n = x.rows() as f64;
    let sizes = cluster_sizes(labels, k);
    let mut grand = vec![0.0; v];
    for row in x.iter_rows() {
        for (g, y) in grand.iter_mut().zip(row) {
            *g += y;
        }
    }
    grand.iter_mut().for_each(|g| *g /= n);

    let mut within = vec![0.0; v];
    for (row, &l) in x.iter_rows().zip(labels) {
        for ((a, y), c) in within.iter_mut().zip(row).zip(centroids.row(l)) {
            *a += (y - c) * (y - c);
        }
    }
    let mut between = vec![0.0; v];
    for (j, &size) in sizes.iter().enumerate() {
        for ((b, c), g) in between.iter_mut().zip(centroids.row(j)).zip(&grand) {
            *b += size as f64 * (c - g) * (c - g);
        }
    }
    // A constant column carries no separation; rounding in the means must
    // not turn that into a huge ratio.
    let mut constant = vec![true; v];
    let first = x.row(0);
    for row in x.iter_rows() {
        for ((c, y), f) in constant.iter_mut().zip(row).zip(first) {
            *c &= y == f;
        }
    }
    let raw = between
        .iter()
        .zip(&within)
        .zip(&constant)
        .map(|((b, a), &c)| if c { 0.0 } else { b / (a + SCORE_EPS) })
        .collect();
    Ok(normalize_scores(raw))
}

fn entropy_of_counts<I: IntoIterator<Item = usize>>(counts: I, total: f64) -> f64 {
    counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let q = c as f64 / total;
            -q * q.ln()
        })
        .sum()
}

/// Normalized mutual information between `labels` and one discrete column.
pub fn normalized_mutual_information(
    labels: &[usize],
    column: &[f64],
    norm: NmiNormalization,
) -> f64 {
    let n = labels.len() as f64;
    let mut cat: HashMap<u64, usize> = HashMap::new();
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut label_counts: HashMap<usize, usize> = HashMap::new();
    let mut cat_counts: Vec<usize> = Vec::new();
    for (&l, &y) in labels.iter().zip(column) {
        // +0.0 folds -0.0 onto 0.0 before hashing the bit pattern.
        let next = cat.len();
        let c = *cat.entry((y + 0.0).to_bits()).or_insert(next);
        if c == cat_counts.len() {
            cat_counts.push(0);
        }
        cat_counts[c] += 1;
        *label_counts.entry(l).or_default() += 1;
        *joint.entry((l, c)).or_default() += 1;
    }
    let h_l = entropy_of_counts(label_counts.values().copied(), n);
    let h_y = entropy_of_counts(cat_counts.iter().copied(), n);
    if h_l <= 0.0 || h_y <= 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for (&(l, c), &nlc) in &joint {
        let pj = nlc as f64 / n;
        let pl = label_counts[&l] as f64 / n;
        let pc = cat_counts[c] as f64 / n;
        mi += pj * (pj / (pl * pc)).ln();
    }
    let mi = mi.max(0.0);
    let score = match norm {
        NmiNormalization::Arithmetic => 2.0 * mi / (h_l + h_y),
        NmiNormalization::Geometric => mi / (h_l * h_y).sqrt(),
        NmiNormalization::Max => mi / h_l.max(h_y),
    };
    score.clamp(0.0, 1.0)
}

/// NMI of each feature column against the cluster labels, normalized to sum
/// one.
pub fn nmi_target(p: &FeatureMatrix, labels: &[usize], norm: NmiNormalization) -> Result<Vec<f64>> {
    let x = &p.values;
    if labels.len() != x.rows() {
        return Err(Error::size("label count differs from feature rows"));
    }
    let raw = (0..x.cols())
        .map(|j| normalized_mutual_information(labels, &x.column(j), norm))
        .collect();
    Ok(normalize_scores(raw))
}

/// Occupancy rate of each ball within each of the two clusters, scored by
/// the absolute rate difference.
pub fn delta_target(balls: &BallSet, labels: &[usize]) -> Result<Vec<f64>> {
    if labels.len() != balls.n_points {
        return Err(Error::size("label count differs from ball point count"));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::parameter("the delta rule is defined for k = 2 only"));
    }
    let sizes = cluster_sizes(labels, 2);
    if sizes.contains(&0) {
        return Err(Error::Degenerate("a cluster is empty".into()));
    }
    let raw = balls
        .balls
        .iter()
        .map(|b| {
            let mut hits = [0usize; 2];
            for &i in b {
                hits[labels[i]] += 1;
            }
            let p0 = hits[0] as f64 / sizes[0] as f64;
            let p1 = hits[1] as f64 / sizes[1] as f64;
            (p1 - p0).abs()
        })
        .collect();
    Ok(normalize_scores(raw))
}

/// Unnormalized `exp(-H)` purity of each ball's cluster-label mix.
pub fn ball_purity(balls: &BallSet, labels: &[usize], k: usize) -> Result<Vec<f64>> {
    if labels.len() != balls.n_points {
        return Err(Error::size("label count differs from ball point count"));
    }
    if labels.iter().any(|&l| l >= k) {
        return Err(Error::validation(format!("label not below k={k}")));
    }
    Ok(balls
        .balls
        .iter()
        .map(|b| {
            let mut counts = vec![0usize; k];
            for &i in b {
                counts[labels[i]] += 1;
            }
            (-entropy_of_counts(counts, b.len() as f64)).exp()
        })
        .collect())
}

pub fn entropy_target(balls: &BallSet, labels: &[usize], k: usize) -> Result<Vec<f64>> {
    Ok(normalize_scores(ball_purity(balls, labels, k)?))
}

/// Convex step from `w` toward `target`, renormalized onto the simplex.
pub fn update_weights(w: &WeightVector, target: &[f64], eta: f64) -> Result<WeightVector> {
    if target.len() != w.len() {
        return Err(Error::size("target length differs from weight length"));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::parameter(format!("eta must lie in [0,1], got {eta}")));
    }
    let stepped: Vec<f64> = w
        .0
        .iter()
        .zip(target)
        // Stepping from `a` keeps `a` bit-exact when the target equals it.
        .map(|(&a, &t)| (a + eta * (t - a)).max(0.0))
        .collect();
    let s: f64 = stepped.iter().sum();
    if (s - 1.0).abs() <= f64::EPSILON * w.len() as f64 {
        // Already on the simplex up to rounding; skipping the division keeps
        // `update(w, w) == w` exact.
        return Ok(WeightVector(stepped));
    }
    if !(s > 0.0) {
        return Ok(WeightVector::uniform(w.len()));
    }
    Ok(WeightVector(stepped.into_iter().map(|x| x / s).collect()))
}

/// One decode iteration as recorded in the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Weighted K-Means objective with the weights used in this pass.
    pub objective: f64,
    pub weights: Vec<f64>,
    pub max_weight_change: f64,
    pub cluster_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub segmentation: Segmentation,
    pub weights: WeightVector,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub centroids: Matrix,
}

fn method_target(
    cfg: &DecodeConfig,
    p: &FeatureMatrix,
    balls: &BallSet,
    fit: &KMeansFit,
) -> Result<Vec<f64>> {
    match cfg.method {
        Method::Fwsa => fwsa_target(p, &fit.labels, &fit.centroids),
        Method::Nmi => nmi_target(p, &fit.labels, cfg.nmi_normalization),
        Method::Delta => delta_target(balls, &fit.labels),
        Method::Entropy => entropy_target(balls, &fit.labels, cfg.k),
    }
}

/// Alternate weighted clustering and weight updates until the weights settle.
pub fn decode(p: &FeatureMatrix, balls: &BallSet, cfg: &DecodeConfig) -> Result<DecodeResult> {
    cfg.validate()?;
    if p.n_features() != balls.len() || p.n_rows() != balls.n_points {
        return Err(Error::size(format!(
            "feature matrix is {}x{}, balls describe {} points x {} balls",
            p.n_rows(),
            p.n_features(),
            balls.n_points,
            balls.len()
        )));
    }
    let km_seed = seed::derive(cfg.seed, Stage::Decode, 0);
    let mut w = WeightVector::uniform(p.n_features());
    let mut centroids: Option<Matrix> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut last: Option<KMeansFit> = None;

    for iteration in 0..cfg.max_iter {
        let fit = weighted_kmeans_restarts(p, cfg.k, &w, km_seed, centroids.as_ref(), cfg.n_init)?;
        let target = method_target(cfg, p, balls, &fit)?;
        let next = update_weights(&w, &target, cfg.eta)?;
        let change = next.max_abs_diff(&w);
        trace.push(TraceEntry {
            iteration,
            objective: fit.inertia,
            weights: next.as_slice().to_vec(),
            max_weight_change: change,
            cluster_sizes: cluster_sizes(&fit.labels, cfg.k),
        });
        centroids = Some(fit.centroids.clone());
        last = Some(fit);
        w = next;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }

    let fit = last.expect("max_iter >= 1");
    let k = cfg.k.max(n_clusters(&fit.labels));
    Ok(DecodeResult {
        segmentation: Segmentation::from_labels(fit.labels, k)?,
        weights: w,
        trace,
        converged,
        centroids: fit.centroids,
    })
}
