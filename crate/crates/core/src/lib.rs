// SPDX-License-Identifier: MIT OR Apache-2.0

//! Hidden-phase segmentation of multivariate time series.
//!
//! Observations are turned into binary event sequences (tail exceedances or
//! membership in K-Means seeded "balls"), each sequence is segmented into
//! regions of high and low event rate by Hierarchical Factor Segmentation,
//! and the per-ball rate profiles are clustered with feature-weighted
//! K-Means to recover the hidden states.

pub mod ballgen;
pub mod error;
pub mod eval;
pub mod excursion;
pub mod format;
pub mod hfs;
pub mod io;
pub mod kmeans;
pub mod matrix;
pub mod pipeline;
pub mod seed;
pub mod simgen;
pub mod timeseries;
pub mod weighted_cluster;

pub use ballgen::{extract_features, generate_balls, BallConfig, BallSet, FeatureMatrix, Features};
pub use error::{Error, Result};
pub use eval::{decoding_accuracy, heavy_tailedness, replicate_experiment, AccuracyReport};
pub use excursion::{ball_encode, recurrence_times, tail_encode, ExcursionSequence, RecurrenceTimes};
pub use hfs::{hfs_decode, hfs_search, segmentation_loss, Criterion, HfsParams, Segmentation};
pub use matrix::Matrix;
pub use pipeline::{run_pipeline, PipelineConfig};
pub use simgen::{LabeledSeries, Scenario, ScenarioSpec};
pub use timeseries::{block_permute, embed_lags, load_csv, standardize, MultiSeries};
pub use weighted_cluster::{decode, DecodeConfig, Method, WeightVector};
