// SPDX-License-Identifier: MIT OR Apache-2.0

//! Ball generation and per-ball feature extraction.
//!
//! K-Means centroids seed `V` balls, each holding the `M` nearest points of
//! its centroid. Every ball turns into an event sequence, HFS fits a two-state
//! rate profile to it, and the per-time rates become one column of the
//! feature matrix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excursion::ball_encode;
use crate::hfs::{hfs_search_with, HfsConfig, HfsFit};
use crate::kmeans::kmeans;
use crate::matrix::{squared_distance, Matrix};
use crate::seed::{self, Stage};

pub const DEFAULT_BALLS: usize = 100;
pub const DEFAULT_RATIO: f64 = 0.1;

/// `V` fixed-size neighbourhoods with the centroids that seeded them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSet {
    /// 0-based member rows of each ball, ascending.
    pub balls: Vec<Vec<usize>>,
    pub centroids: Vec<Vec<f64>>,
    pub ball_size: usize,
    pub n_points: usize,
}

impl BallSet {
    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.balls.len() != self.centroids.len() {
            return Err(Error::validation("ball and centroid counts differ"));
        }
        for (v, b) in self.balls.iter().enumerate() {
            if b.len() != self.ball_size {
                return Err(Error::validation(format!(
                    "ball {v} has {} members, expected {}",
                    b.len(),
                    self.ball_size
                )));
            }
            if b.iter().any(|&i| i >= self.n_points) {
                return Err(Error::validation(format!("ball {v} has out-of-range members")));
            }
        }
        Ok(())
    }
}

/// `N x V` matrix of per-time emission-rate estimates, one column per ball.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Matrix,
    /// Number of temporal segments found for each ball. Matrices loaded from
    /// disk count runs of equal values instead.
    pub segments_per_ball: Vec<usize>,
}

impl FeatureMatrix {
    pub fn new(values: Matrix) -> Self {
        let segments_per_ball = (0..values.cols())
            .map(|j| {
                let col = values.column(j);
                1 + col.windows(2).filter(|w| w[0] != w[1]).count()
            })
            .collect();
        Self {
            values,
            segments_per_ball,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_features(&self) -> usize {
        self.values.cols()
    }

    /// True for columns where HFS settled on a single region.
    pub fn constant_columns(&self) -> Vec<bool> {
        (0..self.n_features())
            .map(|j| {
                let c = self.values.column(j);
                c.iter().all(|&v| v == c[0])
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallConfig {
    pub n_balls: usize,
    pub ratio: f64,
    pub hfs: HfsConfig,
    pub kmeans_restarts: usize,
    pub seed: u64,
}

impl Default for BallConfig {
    fn default() -> Self {
        Self {
            n_balls: DEFAULT_BALLS,
            ratio: DEFAULT_RATIO,
            hfs: HfsConfig::default(),
            kmeans_restarts: 1,
            seed: 0,
        }
    }
}

impl BallConfig {
    /// Check parameters that do not depend on the data size.
    pub fn validate(&self) -> Result<()> {
        if self.n_balls == 0 {
            return Err(Error::parameter("ball count must be at least 1"));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::parameter(format!("ball ratio must lie in (0,1), got {}", self.ratio)));
        }
        if self.kmeans_restarts == 0 {
            return Err(Error::parameter("K-Means restarts must be at least 1"));
        }
        if self.hfs.min_t_star == 0 {
            return Err(Error::parameter("minimum run length must be at least 1"));
        }
        Ok(())
    }
}

pub fn ball_size(n: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::parameter(format!("ball ratio must lie in (0,1), got {ratio}")));
    }
    let m = (ratio * n as f64).ceil() as usize;
    if m == 0 || m > n {
        return Err(Error::size(format!("ball size {m} invalid for {n} points")));
    }
    Ok(m)
}

/// The `m` rows nearest to `center` (Euclidean), ties broken by lower index.
pub fn nearest_neighbors(x: &Matrix, center: &[f64], m: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = x
        .iter_rows()
        .enumerate()
        .map(|(i, r)| (squared_distance(r, center), i))
        .collect();
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if m < scored.len() {
        scored.select_nth_unstable_by(m - 1, by_dist);
        scored.truncate(m);
    }
    let mut members: Vec<usize> = scored.into_iter().map(|(_, i)| i).collect();
    members.sort_unstable();
    members
}

/// Balls around explicitly given centroids.
pub fn balls_from_centroids(x: &Matrix, centroids: &Matrix, ratio: f64) -> Result<BallSet> {
    let m = ball_size(x.rows(), ratio)?;
    if centroids.cols() != x.cols() {
        return Err(Error::size("centroid dimension differs from data dimension"));
    }
    let balls = centroids
        .iter_rows()
        .map(|c| nearest_neighbors(x, c, m))
        .collect();
    Ok(BallSet {
        balls,
        centroids: centroids.iter_rows().map(<[f64]>::to_vec).collect(),
        ball_size: m,
        n_points: x.rows(),
    })
}

/// K-Means seeded balls.
pub fn generate_balls(x: &Matrix, config: &BallConfig) -> Result<BallSet> {
    config.validate()?;
    ball_size(x.rows(), config.ratio)?;
    let km_seed = seed::derive(config.seed, Stage::BallSeeding, 0);
    let fit = kmeans(x, config.n_balls, km_seed, config.kmeans_restarts)?;
    balls_from_centroids(x, &fit.centroids, config.ratio)
}

/// Feature extraction output.
#[derive(Debug, Clone)]
pub struct Features {
    pub matrix: FeatureMatrix,
    pub balls: BallSet,
    /// HFS fits in the row order the balls were encoded in.
    pub fits: Vec<HfsFit>,
    /// Set when rows were shuffled before encoding: entry `i` is the
    /// original row of encoded position `i`. `matrix` and `balls` are always
    /// in original row order.
    pub encoded_order: Option<Vec<usize>>,
}

impl Features {
    /// Move rows encoded in shuffled order back to original order.
    /// `mapping[i]` is the original row at encoded position `i`.
    pub fn restore_order(mut self, mapping: &[usize]) -> Result<Self> {
        let n = self.matrix.n_rows();
        if mapping.len() != n || self.encoded_order.is_some() {
            return Err(Error::size("row mapping does not fit the features"));
        }
        let mut inv = vec![0; n];
        for (i, &src) in mapping.iter().enumerate() {
            inv[src] = i;
        }
        self.matrix = FeatureMatrix::new(self.matrix.values.select_rows(&inv));
        for ball in &mut self.balls.balls {
            for i in ball.iter_mut() {
                *i = mapping[*i];
            }
            ball.sort_unstable();
        }
        self.encoded_order = Some(mapping.to_vec());
        Ok(self)
    }
}

/// Encode each ball, run the HFS search on it, and stack the per-time rates.
pub fn features_from_balls(balls: BallSet, hfs: &HfsConfig) -> Result<Features> {
    balls.validate()?;
    let n = balls.n_points;
    let fits: Vec<HfsFit> = balls
        .balls
        .par_iter()
        .map(|b| {
            let e = ball_encode(n, b)?;
            hfs_search_with(&e, hfs)
        })
        .collect::<Result<_>>()?;
    let columns: Vec<Vec<f64>> = fits.iter().map(|f| f.segmentation.expand_rates()).collect();
    let values = Matrix::from_columns(&columns)?;
    let segments_per_ball = fits.iter().map(|f| f.segmentation.n_segments()).collect();
    Ok(Features {
        matrix: FeatureMatrix {
            values,
            segments_per_ball,
        },
        balls,
        fits,
        encoded_order: None,
    })
}

pub fn extract_features(x: &Matrix, config: &BallConfig) -> Result<Features> {
    let balls = generate_balls(x, config)?;
    features_from_balls(balls, &config.hfs)
}
