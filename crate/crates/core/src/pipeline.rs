// SPDX-License-Identifier: MIT OR Apache-2.0

//! End-to-end decoding: standardize, build ball features, cluster.
//!
//! With a positive `lag` the input must be univariate. It is first embedded
//! into `(x_t, ..., x_{t+lag})` rows and block-shuffled so that serial
//! dependence inside each window is broken. Features are mapped back to the
//! original row order before clustering.

use serde::{Deserialize, Serialize};

use crate::ballgen::{extract_features, BallConfig, Features, DEFAULT_BALLS, DEFAULT_RATIO};
use crate::error::{Error, Result};
use crate::hfs::HfsConfig;
use crate::seed::{self, Stage};
use crate::timeseries::{block_permute, embed_lags, standardize, MultiSeries};
use crate::weighted_cluster::{decode, DecodeConfig, DecodeResult, Method, NmiNormalization};

pub const DEFAULT_WINDOW: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub n_balls: usize,
    pub ratio: f64,
    pub hfs: HfsConfig,
    pub k: usize,
    pub method: Method,
    pub eta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub n_init: usize,
    pub nmi_normalization: NmiNormalization,
    /// Lag embedding order; 0 disables embedding and shuffling.
    pub lag: usize,
    pub window: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let d = DecodeConfig::default();
        Self {
            n_balls: DEFAULT_BALLS,
            ratio: DEFAULT_RATIO,
            hfs: HfsConfig::default(),
            k: d.k,
            method: d.method,
            eta: d.eta,
            tol: d.tol,
            max_iter: d.max_iter,
            n_init: d.n_init,
            nmi_normalization: d.nmi_normalization,
            lag: 0,
            window: DEFAULT_WINDOW,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn ball_config(&self) -> BallConfig {
        BallConfig {
            n_balls: self.n_balls,
            ratio: self.ratio,
            hfs: self.hfs,
            kmeans_restarts: 1,
            seed: self.seed,
        }
    }

    pub fn decode_config(&self) -> DecodeConfig {
        DecodeConfig {
            method: self.method,
            k: self.k,
            eta: self.eta,
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
            n_init: self.n_init,
            nmi_normalization: self.nmi_normalization,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// One label per row of the (embedded) series, in original time order.
    pub labels: Vec<usize>,
    pub features: Features,
    pub decoded: DecodeResult,
}

/// Row count of the decoded series: the input length, or `N - lag` with
/// embedding.
pub fn output_len(n: usize, cfg: &PipelineConfig) -> usize {
    n.saturating_sub(cfg.lag)
}

/// Standardize, optionally embed and shuffle, then build ball features.
///
/// The returned features are in original row order, so decoding them yields
/// labels aligned with the (embedded) series.
pub fn prepare_features(series: &MultiSeries, cfg: &PipelineConfig) -> Result<Features> {
    if cfg.lag == 0 {
        let z = standardize(series)?;
        return extract_features(z.values(), &cfg.ball_config());
    }
    if cfg.window == 0 {
        return Err(Error::parameter("window length must be positive"));
    }
    let embedded = embed_lags(series, cfg.lag)?;
    let window = cfg.window.min(embedded.len());
    let (shuffled, perm) = block_permute(&embedded, window, seed::derive(cfg.seed, Stage::Permute, 0))?;
    let z = standardize(&shuffled)?;
    extract_features(z.values(), &cfg.ball_config())?.restore_order(perm.mapping())
}

pub fn run_pipeline(series: &MultiSeries, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.decode_config().validate()?;
    let features = prepare_features(series, cfg)?;
    let decoded = decode(&features.matrix, &features.balls, &cfg.decode_config())?;
    Ok(PipelineOutput {
        labels: decoded.segmentation.labels().to_vec(),
        features,
        decoded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{ArSpec, Scenario, ScenarioSpec};

    #[test]
    fn lagged_labels_cover_embedded_rows() {
        let data = ScenarioSpec::new(Scenario::Ar(ArSpec::default_for_order(1).unwrap()), 3)
            .generate()
            .unwrap();
        let cfg = PipelineConfig {
            lag: 1,
            n_balls: 20,
            seed: 3,
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&data.series, &cfg).unwrap();
        assert_eq!(out.labels.len(), output_len(data.series.len(), &cfg));
        let order = out.features.encoded_order.as_ref().unwrap();
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..out.labels.len()).collect::<Vec<_>>());
        assert!(order.iter().enumerate().all(|(i, &j)| i / 30 == j / 30));
    }

    #[test]
    fn features_follow_shuffled_rows_back() {
        let data = ScenarioSpec::new(Scenario::Ar(ArSpec::default_for_order(2).unwrap()), 4)
            .generate()
            .unwrap();
        let cfg = PipelineConfig {
            lag: 2,
            n_balls: 10,
            seed: 4,
            ..PipelineConfig::default()
        };
        let f = prepare_features(&data.series, &cfg).unwrap();
        let order = f.encoded_order.as_ref().unwrap();
        for (fit, j) in f.fits.iter().zip(0..) {
            let rates = fit.segmentation.expand_rates();
            for (i, &src) in order.iter().enumerate() {
                assert_eq!(f.matrix.values.get(src, j), rates[i]);
            }
            let members: Vec<usize> = f.balls.balls[j].clone();
            let encoded: Vec<usize> = (0..order.len())
                .filter(|&i| members.contains(&order[i]))
                .collect();
            assert_eq!(encoded.len(), members.len());
        }
    }
}
