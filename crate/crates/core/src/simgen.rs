// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded generators for regime-switching test data.
//!
//! Every generator alternates between two hidden states period by period,
//! always starting in state 0, with period lengths drawn uniformly from an
//! inclusive integer range.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::{self, Stage};
use crate::timeseries::MultiSeries;

pub const DEFAULT_PERIODS: usize = 10;
pub const DEFAULT_PERIOD_RANGE: (usize, usize) = (200, 400);
pub const AR_BURN_IN: usize = 100;

/// Symmetric 2x2 covariance `[[a, b], [b, c]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cov2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Cov2 {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn correlation(r: f64) -> Self {
        Self::new(1.0, r, 1.0)
    }

    /// Lower Cholesky factor `(l11, l21, l22)`.
    pub fn cholesky(&self) -> Result<(f64, f64, f64)> {
        if !(self.a > 0.0) {
            return Err(Error::validation("covariance is not positive definite"));
        }
        let l11 = self.a.sqrt();
        let l21 = self.b / l11;
        let rest = self.c - l21 * l21;
        if !(rest > 0.0) {
            return Err(Error::validation("covariance is not positive definite"));
        }
        Ok((l11, l21, rest.sqrt()))
    }

    pub fn frobenius_distance(&self, other: &Cov2) -> f64 {
        let da = self.a - other.a;
        let db = self.b - other.b;
        let dc = self.c - other.c;
        (da * da + 2.0 * db * db + dc * dc).sqrt()
    }
}

/// The five bivariate Gaussian benchmark cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaussianCase(u8);

impl GaussianCase {
    pub fn new(case: u8) -> Result<Self> {
        if (1..=5).contains(&case) {
            Ok(Self(case))
        } else {
            Err(Error::parameter(format!("case must be 1..5, got {case}")))
        }
    }

    pub fn all() -> impl Iterator<Item = Self> {
        (1..=5).map(Self)
    }

    pub fn number(self) -> u8 {
        self.0
    }

    /// `(Cov_0, Cov_1)`.
    pub fn covariances(self) -> (Cov2, Cov2) {
        let swap = |s1: f64, s2: f64, r: f64| {
            let off = r * s1 * s2;
            (
                Cov2::new(s1 * s1, off, s2 * s2),
                Cov2::new(s2 * s2, off, s1 * s1),
            )
        };
        match self.0 {
            1 => (Cov2::correlation(0.3), Cov2::correlation(0.7)),
            2 => (Cov2::correlation(0.3), Cov2::correlation(-0.7)),
            3 => swap(1.0, 1.5, 0.6),
            4 => swap(1.0, 1.5, 0.2),
            _ => (Cov2::correlation(0.3), Cov2::correlation(-0.3)),
        }
    }
}

/// AR coefficients for each state, lag 1 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArSpec {
    pub phi0: Vec<f64>,
    pub phi1: Vec<f64>,
}

impl ArSpec {
    pub fn new(phi0: Vec<f64>, phi1: Vec<f64>) -> Result<Self> {
        if phi0.len() != phi1.len() {
            return Err(Error::parameter("both states need the same AR order"));
        }
        check_stationary(&phi0)?;
        check_stationary(&phi1)?;
        Ok(Self { phi0, phi1 })
    }

    /// `phi = 0.3 / 0.7` for order 1, `(0.3, 0.2) / (0.5, 0.3)` for order 2.
    pub fn default_for_order(order: usize) -> Result<Self> {
        match order {
            1 => Self::new(vec![0.3], vec![0.7]),
            2 => Self::new(vec![0.3, 0.2], vec![0.5, 0.3]),
            _ => Err(Error::parameter(format!("AR order must be 1 or 2, got {order}"))),
        }
    }

    pub fn order(&self) -> usize {
        self.phi0.len()
    }
}

fn check_stationary(phi: &[f64]) -> Result<()> {
    let ok = match *phi {
        [a] => a.abs() < 1.0,
        [a, b] => b.abs() < 1.0 && a + b < 1.0 && b - a < 1.0,
        _ => return Err(Error::parameter(format!("AR order must be 1 or 2, got {}", phi.len()))),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::validation(format!("AR coefficients {phi:?} are not stationary")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Scenario {
    Gaussian(GaussianCase),
    Ar(ArSpec),
    /// Independent univariate normals with state-dependent scale.
    SigmaSwitch { sigma0: f64, sigma1: f64 },
}

impl Scenario {
    pub fn name(&self) -> String {
        match self {
            Self::Gaussian(c) => format!("Case{}", c.number()),
            Self::Ar(a) => format!("AR({})", a.order()),
            Self::SigmaSwitch { sigma0, sigma1 } => format!("sigma({sigma0},{sigma1})"),
        }
    }

    /// Lag embedding the decoding pipeline applies (the AR order), or 0.
    pub fn embedding_lag(&self) -> usize {
        match self {
            Self::Ar(a) => a.order(),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n_periods: usize,
    pub period_range: (usize, usize),
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        Self {
            scenario,
            n_periods: DEFAULT_PERIODS,
            period_range: DEFAULT_PERIOD_RANGE,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn generate(&self) -> Result<LabeledSeries> {
        let (truth, cps) = gen_switching_periods(self.n_periods, self.period_range, self.seed)?;
        let mut rng = seed::derived_rng(self.seed, Stage::Simulate, 1);
        let series = match &self.scenario {
            Scenario::Gaussian(case) => gaussian_draws(*case, &truth, &mut rng)?,
            Scenario::Ar(spec) => ar_draws(spec, &truth, &mut rng)?,
            Scenario::SigmaSwitch { sigma0, sigma1 } => {
                sigma_draws(*sigma0, *sigma1, &truth, &mut rng)?
            }
        };
        LabeledSeries::new(series, truth, cps)
    }
}

/// A simulated series with its hidden-state path.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub series: MultiSeries,
    pub truth: Vec<usize>,
    /// 0-based index of the first point of every period after the first.
    pub change_points: Vec<usize>,
}

impl LabeledSeries {
    pub fn new(series: MultiSeries, truth: Vec<usize>, change_points: Vec<usize>) -> Result<Self> {
        if series.len() != truth.len() {
            return Err(Error::size("truth length differs from series length"));
        }
        let derived: Vec<usize> = (1..truth.len()).filter(|&t| truth[t] != truth[t - 1]).collect();
        if derived != change_points {
            return Err(Error::validation("change points disagree with truth labels"));
        }
        Ok(Self {
            series,
            truth,
            change_points,
        })
    }
}

/// Alternating state labels `0, 1, 0, ...` with uniform integer period lengths.
pub fn gen_switching_periods(
    n_periods: usize,
    period_range: (usize, usize),
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let (lo, hi) = period_range;
    if n_periods < 1 {
        return Err(Error::parameter("at least one period is required"));
    }
    if lo == 0 || lo > hi {
        return Err(Error::parameter(format!("invalid period range [{lo},{hi}]")));
    }
    let mut rng = seed::derived_rng(seed, Stage::Simulate, 0);
    let lengths: Vec<usize> = (0..n_periods).map(|_| rng.random_range(lo..=hi)).collect();
    Ok(labels_from_lengths(&lengths))
}

/// Truth and change points for explicit period lengths.
pub fn labels_from_lengths(lengths: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut truth = Vec::with_capacity(lengths.iter().sum());
    let mut cps = Vec::with_capacity(lengths.len().saturating_sub(1));
    for (i, &len) in lengths.iter().enumerate() {
        if i > 0 {
            cps.push(truth.len());
        }
        truth.extend(std::iter::repeat_n(i % 2, len));
    }
    (truth, cps)
}

fn gaussian_draws(case: GaussianCase, truth: &[usize], rng: &mut ChaCha8Rng) -> Result<MultiSeries> {
    let (c0, c1) = case.covariances();
    let factors = [c0.cholesky()?, c1.cholesky()?];
    let mut data = Vec::with_capacity(2 * truth.len());
    for &s in truth {
        let (l11, l21, l22) = factors[s];
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        data.push(l11 * z1);
        data.push(l21 * z1 + l22 * z2);
    }
    MultiSeries::from_matrix(Matrix::from_vec(truth.len(), 2, data)?)
}

fn ar_draws(spec: &ArSpec, truth: &[usize], rng: &mut ChaCha8Rng) -> Result<MultiSeries> {
    check_stationary(&spec.phi0)?;
    check_stationary(&spec.phi1)?;
    let order = spec.order();
    // history[0] is X_{t-1}.
    let mut history = vec![0.0; order];
    let mut step = |phi: &[f64], rng: &mut ChaCha8Rng| {
        let eps: f64 = StandardNormal.sample(rng);
        let x = phi.iter().zip(&history).map(|(p, h)| p * h).sum::<f64>() + eps;
        history.rotate_right(1);
        history[0] = x;
        x
    };
    for _ in 0..AR_BURN_IN {
        step(&spec.phi0, rng);
    }
    let values: Vec<f64> = truth
        .iter()
        .map(|&s| step(if s == 0 { &spec.phi0 } else { &spec.phi1 }, rng))
        .collect();
    MultiSeries::from_columns(&[values])
}

fn sigma_draws(sigma0: f64, sigma1: f64, truth: &[usize], rng: &mut ChaCha8Rng) -> Result<MultiSeries> {
    if !(sigma0 > 0.0 && sigma1 > 0.0) {
        return Err(Error::parameter("standard deviations must be positive"));
    }
    let values: Vec<f64> = truth
        .iter()
        .map(|&s| {
            let z: f64 = StandardNormal.sample(rng);
            z * if s == 0 { sigma0 } else { sigma1 }
        })
        .collect();
    MultiSeries::from_columns(&[values])
}

pub fn gen_bivariate_gaussian(
    case: u8,
    n_periods: usize,
    period_range: (usize, usize),
    seed: u64,
) -> Result<LabeledSeries> {
    ScenarioSpec {
        scenario: Scenario::Gaussian(GaussianCase::new(case)?),
        n_periods,
        period_range,
        seed,
    }
    .generate()
}

/// Regime-switching AR series with the default coefficients for `order`.
pub fn gen_ar(order: usize, n_periods: usize, period_range: (usize, usize), seed: u64) -> Result<LabeledSeries> {
    ScenarioSpec {
        scenario: Scenario::Ar(ArSpec::default_for_order(order)?),
        n_periods,
        period_range,
        seed,
    }
    .generate()
}

/// Independent normals with scale `sigmas[i % 2]` over explicit period lengths.
pub fn gen_sigma_switch(sigma0: f64, sigma1: f64, lengths: &[usize], seed: u64) -> Result<LabeledSeries> {
    if lengths.is_empty() || lengths.contains(&0) {
        return Err(Error::parameter("period lengths must be positive"));
    }
    let (truth, cps) = labels_from_lengths(lengths);
    let mut rng = seed::derived_rng(seed, Stage::Simulate, 1);
    let series = sigma_draws(sigma0, sigma1, &truth, &mut rng)?;
    LabeledSeries::new(series, truth, cps)
}

/// Sample covariance of the rows of a 2-column matrix selected by `keep`.
pub fn sample_cov2(x: &Matrix, keep: impl Fn(usize) -> bool) -> Cov2 {
    let rows: Vec<&[f64]> = x.iter_rows().enumerate().filter(|(i, _)| keep(*i)).map(|(_, r)| r).collect();
    let n = rows.len() as f64;
    let m0 = rows.iter().map(|r| r[0]).sum::<f64>() / n;
    let m1 = rows.iter().map(|r| r[1]).sum::<f64>() / n;
    let mut a = 0.0;
    let mut b = 0.0;
    let mut c = 0.0;
    for r in &rows {
        let d0 = r[0] - m0;
        let d1 = r[1] - m1;
        a += d0 * d0;
        b += d0 * d1;
        c += d1 * d1;
    }
    let denom = n - 1.0;
    Cov2::new(a / denom, b / denom, c / denom)
}

/// Lag-1 autocorrelation over consecutive pairs that both satisfy `keep`.
pub fn lag1_autocorrelation(x: &[f64], keep: impl Fn(usize) -> bool) -> f64 {
    let pairs: Vec<(f64, f64)> = (1..x.len())
        .filter(|&t| keep(t) && keep(t - 1))
        .map(|t| (x[t - 1], x[t]))
        .collect();
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for &(a, b) in &pairs {
        sab += (a - ma) * (b - mb);
        saa += (a - ma) * (a - ma);
        sbb += (b - mb) * (b - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_totals() {
        let (truth, cps) = gen_switching_periods(10, (200, 400), 1).unwrap();
        assert!((2000..=4000).contains(&truth.len()));
        assert_eq!(cps.len(), 9);
        assert_eq!(truth[0], 0);
    }

    #[test]
    fn fixed_lengths() {
        let (truth, cps) = gen_switching_periods(2, (5, 5), 3).unwrap();
        assert_eq!(truth, [0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(cps, [5]);
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = gen_bivariate_gaussian(1, 4, (50, 60), 9).unwrap();
        let b = gen_bivariate_gaussian(1, 4, (50, 60), 9).unwrap();
        let c = gen_bivariate_gaussian(1, 4, (50, 60), 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.series, c.series);
    }

    #[test]
    fn case1_state0_correlation() {
        let s = gen_bivariate_gaussian(1, 40, (200, 400), 2).unwrap();
        let cov = sample_cov2(s.series.values(), |i| s.truth[i] == 0);
        let r = cov.b / (cov.a * cov.c).sqrt();
        assert!((r - 0.3).abs() < 0.05, "{r}");
    }

    #[test]
    fn case2_state1_correlation() {
        let s = gen_bivariate_gaussian(2, 40, (200, 400), 3).unwrap();
        let cov = sample_cov2(s.series.values(), |i| s.truth[i] == 1);
        let r = cov.b / (cov.a * cov.c).sqrt();
        assert!((r + 0.7).abs() < 0.05, "{r}");
    }

    #[test]
    fn case3_state1_variances() {
        let s = gen_bivariate_gaussian(3, 40, (200, 400), 4).unwrap();
        let cov = sample_cov2(s.series.values(), |i| s.truth[i] == 1);
        assert!((cov.a / 2.25 - 1.0).abs() < 0.1, "{}", cov.a);
        assert!((cov.c - 1.0).abs() < 0.1, "{}", cov.c);
    }

    #[test]
    fn ar1_autocorrelations() {
        let s = gen_ar(1, 2, (10_000, 10_000), 5).unwrap();
        let x = s.series.column(0);
        let r0 = lag1_autocorrelation(&x, |t| s.truth[t] == 0);
        let r1 = lag1_autocorrelation(&x, |t| s.truth[t] == 1);
        assert!((r0 - 0.3).abs() < 0.05, "{r0}");
        assert!((r1 - 0.7).abs() < 0.05, "{r1}");
    }

    #[test]
    fn unit_root_rejected() {
        assert!(matches!(ArSpec::new(vec![1.0], vec![0.5]), Err(Error::Validation(_))));
        assert!(ArSpec::new(vec![0.6, 0.5], vec![0.1, 0.1]).is_err());
        assert!(ArSpec::default_for_order(3).is_err());
    }

    #[test]
    fn bad_case_rejected() {
        assert!(gen_bivariate_gaussian(6, 2, (5, 5), 0).is_err());
    }

    #[test]
    fn labels_change_at_change_points() {
        let s = gen_ar(2, 6, (20, 40), 8).unwrap();
        for t in 1..s.truth.len() {
            assert_eq!(s.truth[t] != s.truth[t - 1], s.change_points.contains(&t));
        }
    }
}
