// SPDX-License-Identifier: MIT OR Apache-2.0

//! Python bindings for `regime_seg`.
//!
//! Series are passed as lists of rows (or a flat list for one column) and
//! labels as lists of ints. Parameter problems raise `ValueError`; other
//! failures raise `RuntimeError`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use regime_seg::eval::{self, AccuracyReport as CoreAccuracy, TailReport as CoreTail};
use regime_seg::excursion::{self, ExcursionSequence};
use regime_seg::hfs::{self, HfsConfig, HfsFit as CoreFit};
use regime_seg::matrix::Matrix;
use regime_seg::pipeline::{self, PipelineConfig};
use regime_seg::simgen::{ArSpec, GaussianCase, Scenario, ScenarioSpec};
use regime_seg::timeseries::MultiSeries;
use regime_seg::weighted_cluster::Method;

fn to_py(e: regime_seg::Error) -> PyErr {
    if e.is_usage() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn parse<T: std::str::FromStr<Err = regime_seg::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn bits_from(bits: Vec<u8>) -> PyResult<ExcursionSequence> {
    ExcursionSequence::new(bits).map_err(to_py)
}

fn series_from_rows(rows: Vec<Vec<f64>>) -> PyResult<MultiSeries> {
    let m = Matrix::from_rows(&rows).map_err(to_py)?;
    MultiSeries::from_matrix(m).map_err(to_py)
}

fn scenario_from(case: Option<u8>, ar: Option<usize>) -> PyResult<Scenario> {
    match (case, ar) {
        (Some(c), None) => Ok(Scenario::Gaussian(GaussianCase::new(c).map_err(to_py)?)),
        (None, Some(o)) => Ok(Scenario::Ar(ArSpec::default_for_order(o).map_err(to_py)?)),
        _ => Err(PyValueError::new_err("give exactly one of case or ar")),
    }
}

/// Result of an HFS search on one event sequence.
#[pyclass(frozen, get_all)]
struct HfsFit {
    labels: Vec<usize>,
    region_rates: Vec<Option<f64>>,
    n_switches: usize,
    t: usize,
    t_star: usize,
    loss: f64,
    q_k: usize,
    criterion: String,
}

impl From<CoreFit> for HfsFit {
    fn from(f: CoreFit) -> Self {
        Self {
            region_rates: f.segmentation.region_rates().to_vec(),
            n_switches: f.segmentation.n_switches(),
            labels: f.segmentation.into_labels(),
            t: f.params.t,
            t_star: f.params.t_star,
            loss: f.report.loss,
            q_k: f.report.q_k,
            criterion: format!("{:?}", f.report.criterion).to_ascii_uppercase(),
        }
    }
}

#[pymethods]
impl HfsFit {
    fn __repr__(&self) -> String {
        format!(
            "HfsFit(t={}, t_star={}, n_switches={}, loss={:.4})",
            self.t, self.t_star, self.n_switches, self.loss
        )
    }
}

/// Labels and weights from the full decoding pipeline.
#[pyclass(frozen, get_all)]
struct Decoding {
    labels: Vec<usize>,
    weights: Vec<f64>,
    converged: bool,
    iterations: usize,
    features: Vec<Vec<f64>>,
}

#[pymethods]
impl Decoding {
    fn __repr__(&self) -> String {
        format!(
            "Decoding(n={}, balls={}, converged={}, iterations={})",
            self.labels.len(),
            self.weights.len(),
            self.converged,
            self.iterations
        )
    }
}

#[pyclass(frozen, get_all)]
struct AccuracyReport {
    mean: f64,
    std: f64,
    n_reps: usize,
    per_rep: Vec<f64>,
}

impl From<CoreAccuracy> for AccuracyReport {
    fn from(r: CoreAccuracy) -> Self {
        Self {
            mean: r.mean,
            std: r.std,
            n_reps: r.n_reps,
            per_rep: r.per_rep,
        }
    }
}

#[pymethods]
impl AccuracyReport {
    fn __repr__(&self) -> String {
        format!("AccuracyReport(mean={:.4}, std={:.4}, n_reps={})", self.mean, self.std, self.n_reps)
    }
}

#[pyclass(frozen, get_all)]
struct TailReport {
    z: f64,
    sigma: f64,
    tail_prob: (f64, f64),
    volatile_state: usize,
    delta: f64,
}

impl From<CoreTail> for TailReport {
    fn from(r: CoreTail) -> Self {
        Self {
            z: r.z,
            sigma: r.sigma,
            tail_prob: (r.tail_prob[0], r.tail_prob[1]),
            volatile_state: r.volatile_state,
            delta: r.delta,
        }
    }
}

#[pymethods]
impl TailReport {
    fn __repr__(&self) -> String {
        format!("TailReport(z={}, delta={:.4}, volatile_state={})", self.z, self.delta, self.volatile_state)
    }
}

/// Mark values in either empirical tail as events.
#[pyfunction]
#[pyo3(signature = (x, alpha = excursion::DEFAULT_ALPHA, beta = excursion::DEFAULT_BETA))]
fn tail_encode(x: Vec<f64>, alpha: f64, beta: f64) -> PyResult<Vec<u8>> {
    Ok(excursion::tail_encode(&x, alpha, beta).map_err(to_py)?.bits().to_vec())
}

/// Gaps before, between and after the events of a 0/1 sequence.
#[pyfunction]
fn recurrence_times(bits: Vec<u8>) -> PyResult<Vec<usize>> {
    Ok(excursion::recurrence_times(&bits_from(bits)?).times().to_vec())
}

/// Segment a 0/1 sequence into high- and low-rate regions.
#[pyfunction]
#[pyo3(signature = (bits, criterion = "aic", param_count = "segments", min_run = hfs::DEFAULT_MIN_T_STAR))]
fn hfs_search(bits: Vec<u8>, criterion: &str, param_count: &str, min_run: usize) -> PyResult<HfsFit> {
    let cfg = HfsConfig {
        criterion: parse(criterion)?,
        param_count: parse(param_count)?,
        min_t_star: min_run,
        ..HfsConfig::default()
    };
    let e = bits_from(bits)?;
    Ok(hfs::hfs_search_with(&e, &cfg).map_err(to_py)?.into())
}

/// `(empirical, geometric)` CDF pairs at each distinct waiting time.
#[pyfunction]
fn pp_plot_data(times: Vec<usize>, p: f64) -> PyResult<Vec<(f64, f64)>> {
    hfs::pp_plot_data(&times, p).map_err(to_py)
}

/// Run the full decoding pipeline on a list of rows.
#[pyfunction]
#[pyo3(signature = (
    rows, method = "entropy", k = 2, n_balls = 100, ratio = 0.1, eta = 0.5,
    criterion = "aic", lag = 0, window = pipeline::DEFAULT_WINDOW, seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn decode_series(
    rows: Vec<Vec<f64>>,
    method: &str,
    k: usize,
    n_balls: usize,
    ratio: f64,
    eta: f64,
    criterion: &str,
    lag: usize,
    window: usize,
    seed: u64,
) -> PyResult<Decoding> {
    let d = PipelineConfig::default();
    let cfg = PipelineConfig {
        method: parse::<Method>(method)?,
        k,
        n_balls,
        ratio,
        eta,
        hfs: HfsConfig {
            criterion: parse(criterion)?,
            ..d.hfs
        },
        lag,
        window,
        seed,
        ..d
    };
    let s = series_from_rows(rows)?;
    let out = pipeline::run_pipeline(&s, &cfg).map_err(to_py)?;
    let features = out.features.matrix.values.iter_rows().map(<[f64]>::to_vec).collect();
    Ok(Decoding {
        labels: out.labels,
        weights: out.decoded.weights.as_slice().to_vec(),
        converged: out.decoded.converged,
        iterations: out.decoded.trace.len(),
        features,
    })
}

/// Simulate a scenario; returns `(rows, truth)`.
#[pyfunction]
#[pyo3(signature = (case = None, ar = None, seed = 0))]
fn simulate(case: Option<u8>, ar: Option<usize>, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<usize>)> {
    let data = ScenarioSpec::new(scenario_from(case, ar)?, seed).generate().map_err(to_py)?;
    let rows = data.series.values().iter_rows().map(<[f64]>::to_vec).collect();
    Ok((rows, data.truth))
}

/// Matching fraction under the better of the two label alignments.
#[pyfunction]
fn decoding_accuracy(est: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    eval::decoding_accuracy(&est, &truth).map_err(to_py)
}

/// Simulate and decode `n_reps` times.
#[pyfunction]
#[pyo3(signature = (case = None, ar = None, method = "entropy", n_reps = 100, seed = 0))]
fn replicate(case: Option<u8>, ar: Option<usize>, method: &str, n_reps: usize, seed: u64) -> PyResult<AccuracyReport> {
    let spec = ScenarioSpec::new(scenario_from(case, ar)?, seed);
    let m = parse::<Method>(method)?;
    let r = eval::replicate_experiment(&spec, &PipelineConfig::default(), m, n_reps, seed).map_err(to_py)?;
    Ok(r.into())
}

/// Per-state probability of exceeding `z` pooled standard deviations.
#[pyfunction]
fn heavy_tailedness(x: Vec<f64>, labels: Vec<usize>, z: f64) -> PyResult<TailReport> {
    Ok(eval::heavy_tailedness(&x, &labels, z).map_err(to_py)?.into())
}

/// Gaussian kernel density of `samples` at `grid`.
#[pyfunction]
fn gaussian_kde(samples: Vec<f64>, grid: Vec<f64>) -> PyResult<Vec<f64>> {
    eval::gaussian_kde(&samples, &grid).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "regime_seg")]
fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<HfsFit>()?;
    m.add_class::<Decoding>()?;
    m.add_class::<AccuracyReport>()?;
    m.add_class::<TailReport>()?;
    m.add_function(wrap_pyfunction!(tail_encode, m)?)?;
    m.add_function(wrap_pyfunction!(recurrence_times, m)?)?;
    m.add_function(wrap_pyfunction!(hfs_search, m)?)?;
    m.add_function(wrap_pyfunction!(pp_plot_data, m)?)?;
    m.add_function(wrap_pyfunction!(decode_series, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(decoding_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(replicate, m)?)?;
    m.add_function(wrap_pyfunction!(heavy_tailedness, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_kde, m)?)?;
    Ok(())
}
