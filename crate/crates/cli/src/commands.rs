// SPDX-License-Identifier: MIT OR Apache-2.0

//! Subcommand bodies.

use std::path::{Path, PathBuf};

use serde::Serialize;

use regime_seg::ballgen::{DEFAULT_BALLS, DEFAULT_RATIO};
use regime_seg::eval::{
    decoding_accuracy, gaussian_kde, heavy_tailedness, kde_grid, replicate_experiment, AccuracyReport, TailReport,
};
use regime_seg::excursion::{
    check_tail_levels, encode_with_thresholds, recurrence_times, tail_thresholds, DEFAULT_ALPHA, DEFAULT_BETA,
};
use regime_seg::format::to_json;
use regime_seg::hfs::{hfs_search_with, pp_plot_data, FitReport, HfsConfig, HfsParams};
use regime_seg::io;
use regime_seg::pipeline::{output_len, prepare_features, run_pipeline, PipelineConfig, DEFAULT_WINDOW};
use regime_seg::simgen::{
    ArSpec, GaussianCase, Scenario, ScenarioSpec, DEFAULT_PERIODS, DEFAULT_PERIOD_RANGE,
};
use regime_seg::timeseries::{load_csv, MultiSeries};
use regime_seg::weighted_cluster::{decode as decode_features, DecodeConfig, Method, TraceEntry};

use crate::config::Config;
use crate::{
    CliError, ClusterArgs, ColumnArg, DecodeArgs, EvaluateArgs, ExtractArgs, FeatureArgs, HfsArgs, InputArgs,
    PpplotArgs, SegmentArgs, SimulateArgs, TailArgs,
};

const DEFAULT_REPS: usize = 100;
const DEFAULT_KDE_POINTS: usize = 512;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_input(a: &InputArgs) -> Result<MultiSeries, CliError> {
    let path = a.input.as_ref().ok_or_else(|| usage("--input is required"))?;
    if !path.exists() {
        return Err(usage(format!("input file {} not found", path.display())));
    }
    Ok(load_csv(path, !a.no_header)?)
}

fn select_column(s: &MultiSeries, c: &ColumnArg) -> Result<Vec<f64>, CliError> {
    let j = match &c.column {
        None => 0,
        Some(key) => match key.parse::<usize>() {
            Ok(i) if (1..=s.dims()).contains(&i) => i - 1,
            Ok(i) => return Err(usage(format!("column {i} out of range 1..={}", s.dims()))),
            Err(_) => s
                .dim_names()
                .iter()
                .position(|n| n == key)
                .ok_or_else(|| usage(format!("no column named {key:?}")))?,
        },
    };
    Ok(s.column(j))
}

fn time_keys(s: &MultiSeries, n: usize) -> Vec<String> {
    (0..n).map(|i| s.time_label(i)).collect()
}

fn tail_levels(a: &TailArgs, cfg: &Config) -> Result<(f64, f64), CliError> {
    let alpha = cfg.pick(a.alpha, "alpha", DEFAULT_ALPHA)?;
    let beta = cfg.pick(a.beta, "beta", DEFAULT_BETA)?;
    check_tail_levels(alpha, beta)?;
    Ok((alpha, beta))
}

fn hfs_config(a: &HfsArgs, cfg: &Config) -> Result<HfsConfig, CliError> {
    let d = HfsConfig::default();
    let hfs = HfsConfig {
        criterion: cfg.pick(a.criterion, "criterion", d.criterion)?,
        param_count: cfg.pick(a.param_count, "param_count", d.param_count)?,
        min_t_star: cfg.pick(a.min_run, "min_run", d.min_t_star)?,
        ..d
    };
    if hfs.min_t_star == 0 {
        return Err(usage("--min-run must be at least 1"));
    }
    Ok(hfs)
}

fn pipeline_config(f: &FeatureArgs, c: &ClusterArgs, seed: Option<u64>, cfg: &Config) -> Result<PipelineConfig, CliError> {
    let d = PipelineConfig::default();
    let p = PipelineConfig {
        n_balls: cfg.pick(f.n_balls, "n_balls", DEFAULT_BALLS)?,
        ratio: cfg.pick(f.ratio, "ratio", DEFAULT_RATIO)?,
        hfs: hfs_config(&f.hfs, cfg)?,
        k: cfg.pick(c.k, "k", d.k)?,
        method: cfg.pick(c.method, "method", d.method)?,
        eta: cfg.pick(c.eta, "eta", d.eta)?,
        tol: cfg.pick(c.tol, "tol", d.tol)?,
        max_iter: cfg.pick(c.max_iter, "max_iter", d.max_iter)?,
        n_init: cfg.pick(c.n_init, "n_init", d.n_init)?,
        nmi_normalization: cfg.pick(c.nmi_norm, "nmi_norm", d.nmi_normalization)?,
        lag: cfg.pick(f.lag, "lag", 0)?,
        window: cfg.pick(f.window, "window", DEFAULT_WINDOW)?,
        seed: cfg.pick(seed, "seed", 0)?,
    };
    p.ball_config().validate()?;
    p.decode_config().validate()?;
    if p.lag > 0 && p.window == 0 {
        return Err(usage("--window must be positive"));
    }
    Ok(p)
}

fn decode_config(c: &ClusterArgs, seed: Option<u64>, cfg: &Config) -> Result<DecodeConfig, CliError> {
    let d = DecodeConfig::default();
    let dc = DecodeConfig {
        method: cfg.pick(c.method, "method", d.method)?,
        k: cfg.pick(c.k, "k", d.k)?,
        eta: cfg.pick(c.eta, "eta", d.eta)?,
        max_iter: cfg.pick(c.max_iter, "max_iter", d.max_iter)?,
        tol: cfg.pick(c.tol, "tol", d.tol)?,
        seed: cfg.pick(seed, "seed", d.seed)?,
        n_init: cfg.pick(c.n_init, "n_init", d.n_init)?,
        nmi_normalization: cfg.pick(c.nmi_norm, "nmi_norm", d.nmi_normalization)?,
    };
    dc.validate()?;
    Ok(dc)
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    match path {
        Some(p) => io::save_json(p, value)?,
        None => print!("{}", to_json(value)?),
    }
    Ok(())
}

pub fn simulate(a: &SimulateArgs, cfg: &Config) -> Result<(), CliError> {
    let scenario = if let Some(c) = a.case {
        Scenario::Gaussian(GaussianCase::new(c)?)
    } else if let Some(order) = a.ar {
        Scenario::Ar(ArSpec::default_for_order(order)?)
    } else {
        let text = a.sigma_switch.as_deref().unwrap_or_default();
        let parts: Vec<f64> = text
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| usage(format!("--sigma-switch expects two numbers, got {text:?}")))?;
        match parts[..] {
            [s0, s1] if s0 > 0.0 && s1 > 0.0 => Scenario::SigmaSwitch { sigma0: s0, sigma1: s1 },
            _ => return Err(usage("--sigma-switch expects two positive scales")),
        }
    };
    let spec = ScenarioSpec {
        scenario,
        n_periods: cfg.pick(a.periods, "periods", DEFAULT_PERIODS)?,
        period_range: (
            cfg.pick(a.min_len, "min_len", DEFAULT_PERIOD_RANGE.0)?,
            cfg.pick(a.max_len, "max_len", DEFAULT_PERIOD_RANGE.1)?,
        ),
        seed: cfg.pick(a.seed, "seed", 0)?,
    };
    let data = spec.generate()?;
    io::save_series(&a.out, &data.series)?;
    if let Some(t) = &a.truth {
        io::save_labels(t, &time_keys(&data.series, data.series.len()), &data.truth)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SegmentReport {
    n: usize,
    n_events: usize,
    alpha: f64,
    beta: f64,
    lower_threshold: f64,
    upper_threshold: f64,
    params: HfsParams,
    n_switches: usize,
    region_rates: Vec<Option<f64>>,
    candidates_evaluated: usize,
    fit: FitReport,
}

pub fn segment(a: &SegmentArgs, cfg: &Config) -> Result<(), CliError> {
    let (alpha, beta) = tail_levels(&a.tails, cfg)?;
    let hfs = hfs_config(&a.hfs, cfg)?;
    let s = load_input(&a.input)?;
    let x = select_column(&s, &a.column)?;
    let (lo, hi) = tail_thresholds(&x, alpha, beta)?;
    let e = encode_with_thresholds(&x, lo, hi);
    let fit = hfs_search_with(&e, &hfs)?;
    io::save_labels(&a.out, &time_keys(&s, s.len()), fit.segmentation.labels())?;
    if let Some(p) = &a.report {
        let report = SegmentReport {
            n: e.len(),
            n_events: e.n_events(),
            alpha,
            beta,
            lower_threshold: lo,
            upper_threshold: hi,
            params: fit.params,
            n_switches: fit.segmentation.n_switches(),
            region_rates: fit.segmentation.region_rates().to_vec(),
            candidates_evaluated: fit.candidates_evaluated,
            fit: fit.report,
        };
        io::save_json(p, &report)?;
    }
    Ok(())
}

pub fn extract(a: &ExtractArgs, cfg: &Config) -> Result<(), CliError> {
    let p = pipeline_config(&a.features, &ClusterArgs::none(), a.seed, cfg)?;
    let s = load_input(&a.input)?;
    let f = prepare_features(&s, &p)?;
    io::save_features(&a.out, &time_keys(&s, output_len(s.len(), &p)), &f.matrix)?;
    io::save_json(&a.balls_out, &f.balls)?;
    Ok(())
}

#[derive(Serialize)]
struct TraceReport<'a> {
    method: Method,
    converged: bool,
    iterations: usize,
    trace: &'a [TraceEntry],
}

pub fn decode(a: &DecodeArgs, cfg: &Config) -> Result<(), CliError> {
    let dc = decode_config(&a.cluster, a.seed, cfg)?;
    for p in [&a.features, &a.balls] {
        if !p.exists() {
            return Err(usage(format!("input file {} not found", p.display())));
        }
    }
    let (times, features) = io::load_features(&a.features)?;
    let balls = io::load_balls(&a.balls, features.n_rows(), features.n_features())?;
    let out = decode_features(&features, &balls, &dc)?;
    io::save_labels(&a.out, &times, out.segmentation.labels())?;
    if let Some(p) = &a.weights {
        io::save_weights(p, out.weights.as_slice())?;
    }
    if let Some(p) = &a.trace {
        let report = TraceReport {
            method: dc.method,
            converged: out.converged,
            iterations: out.trace.len(),
            trace: &out.trace,
        };
        io::save_json(p, &report)?;
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|_| usage(format!("bad {what} {v:?}"))))
        .collect()
}

#[derive(Serialize)]
struct ReplicationRow {
    scenario: String,
    method: Method,
    report: AccuracyReport,
}

#[derive(Serialize)]
struct ReplicationReport {
    n_reps: usize,
    seed: u64,
    results: Vec<ReplicationRow>,
}

fn evaluate_replications(a: &EvaluateArgs, cfg: &Config, p: &PipelineConfig) -> Result<(), CliError> {
    let scenarios: Vec<Scenario> = if a.table {
        GaussianCase::all().map(Scenario::Gaussian).collect()
    } else if let Some(c) = a.case {
        vec![Scenario::Gaussian(GaussianCase::new(c)?)]
    } else {
        let order = a.ar.unwrap_or_default();
        vec![Scenario::Ar(ArSpec::default_for_order(order)?)]
    };
    let methods: Vec<Method> = match cfg.pick_opt(a.methods.clone(), "methods")? {
        Some(text) => parse_list(&text, "method")?,
        None if a.table => Method::ALL.to_vec(),
        None => vec![p.method],
    };
    if p.k != 2 {
        return Err(usage("replication scores two-state decodings; use --k 2"));
    }
    let n_reps = cfg.pick(a.reps, "reps", DEFAULT_REPS)?;
    let mut results = Vec::new();
    let mut rows = Vec::new();
    for sc in scenarios {
        let spec = ScenarioSpec::new(sc, p.seed);
        let mut means = Vec::new();
        for &m in &methods {
            let report = replicate_experiment(&spec, p, m, n_reps, p.seed)?;
            eprintln!(
                "{:<8} {:<8} mean {:.4} std {:.4}",
                spec.scenario.name(),
                m.name(),
                report.mean,
                report.std
            );
            means.push(report.mean);
            results.push(ReplicationRow {
                scenario: spec.scenario.name(),
                method: m,
                report,
            });
        }
        rows.push((spec.scenario.name(), means));
    }
    if let Some(t) = &a.table_out {
        let cols: Vec<String> = methods.iter().map(|m| m.name().to_owned()).collect();
        io::save_table(t, "scenario", &cols, &rows)?;
    }
    let report = ReplicationReport {
        n_reps,
        seed: p.seed,
        results,
    };
    write_json(a.out.as_deref(), &report)
}

#[derive(Serialize)]
struct TailSummary {
    n: usize,
    state_sizes: [usize; 2],
    tails: Vec<TailReport>,
}

fn write_kde(prefix: &Path, x: &[f64], labels: &[usize], points: usize) -> Result<(), CliError> {
    let grid = kde_grid(x, points)?;
    for state in 0..2 {
        let samples: Vec<f64> = x.iter().zip(labels).filter(|(_, &l)| l == state).map(|(&v, _)| v).collect();
        let density = gaussian_kde(&samples, &grid)?;
        let rows: Vec<(f64, f64)> = grid.iter().copied().zip(density).collect();
        let mut name = prefix.as_os_str().to_owned();
        name.push(format!("_state{state}.csv"));
        io::save_pairs(PathBuf::from(name), ("x", "density"), &rows)?;
    }
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs, cfg: &Config) -> Result<(), CliError> {
    let p = pipeline_config(&a.features, &a.cluster, a.seed, cfg)?;
    if a.table || a.case.is_some() || a.ar.is_some() {
        return evaluate_replications(a, cfg, &p);
    }
    let z_text = cfg.pick_opt(a.z.clone(), "z")?;
    if a.truth.is_none() && z_text.is_none() && a.kde_prefix.is_none() {
        return Err(usage("nothing to evaluate: give --truth, --z, --kde-prefix, --case, --ar or --table"));
    }
    let series = match &a.input.input {
        Some(_) => Some(load_input(&a.input)?),
        None => None,
    };
    let labels = match (&a.labels, &series) {
        (Some(path), _) => {
            if !path.exists() {
                return Err(usage(format!("label file {} not found", path.display())));
            }
            io::load_labels(path)?.1
        }
        (None, Some(s)) => {
            let out = run_pipeline(s, &p)?;
            if let Some(seg) = &a.segmentation {
                io::save_labels(seg, &time_keys(s, out.labels.len()), &out.labels)?;
            }
            out.labels
        }
        (None, None) => return Err(usage("give --labels or --input")),
    };

    if let Some(tpath) = &a.truth {
        if !tpath.exists() {
            return Err(usage(format!("truth file {} not found", tpath.display())));
        }
        let truth = io::load_labels(tpath)?.1;
        if truth.len() < labels.len() {
            return Err(usage(format!("{} truth labels for {} estimates", truth.len(), labels.len())));
        }
        let acc = decoding_accuracy(&labels, &truth[..labels.len()])?;
        let report = AccuracyReport::from_values(vec![acc])?;
        if z_text.is_none() && a.kde_prefix.is_none() {
            return write_json(a.out.as_deref(), &report);
        }
        eprintln!("accuracy {acc:.4}");
    }

    let s = series.ok_or_else(|| usage("tail comparison needs --input"))?;
    let x = select_column(&s, &a.column)?;
    if labels.len() > x.len() {
        return Err(usage(format!("{} labels for {} observations", labels.len(), x.len())));
    }
    let x = &x[..labels.len()];
    if let Some(prefix) = &a.kde_prefix {
        let points = cfg.pick(a.kde_points, "kde_points", DEFAULT_KDE_POINTS)?;
        write_kde(prefix, x, &labels, points)?;
    }
    let zs: Vec<f64> = match &z_text {
        Some(t) => parse_list(t, "z level")?,
        None => vec![1.0, 2.0, 3.0],
    };
    let tails = zs
        .iter()
        .map(|&z| heavy_tailedness(x, &labels, z))
        .collect::<regime_seg::Result<Vec<_>>>()?;
    let ones = labels.iter().filter(|&&l| l == 1).count();
    let summary = TailSummary {
        n: labels.len(),
        state_sizes: [labels.len() - ones, ones],
        tails,
    };
    write_json(a.out.as_deref(), &summary)
}

pub fn ppplot(a: &PpplotArgs, cfg: &Config) -> Result<(), CliError> {
    let (alpha, beta) = tail_levels(&a.tails, cfg)?;
    let s = load_input(&a.input)?;
    let x = select_column(&s, &a.column)?;
    let (lo, hi) = tail_thresholds(&x, alpha, beta)?;
    let e = encode_with_thresholds(&x, lo, hi);
    if e.n_events() < 2 {
        return Err(usage("need at least two events for waiting times"));
    }
    let r = recurrence_times(&e);
    let rate = a.p.unwrap_or(e.n_events() as f64 / e.len() as f64);
    let pairs = pp_plot_data(r.interior(), rate)?;
    io::save_pairs(&a.out, ("empirical", "theoretical"), &pairs)?;
    Ok(())
}

impl ClusterArgs {
    fn none() -> Self {
        Self {
            method: None,
            k: None,
            eta: None,
            tol: None,
            max_iter: None,
            n_init: None,
            nmi_norm: None,
        }
    }
}
