//! Experiment orchestration.
//!
//! [`simulate`] produces the raw per-run data: the noise epoch, the measured ε₀, every
//! method's scaling plan and one expectation value per (λ, twirl). Samples for a λ are
//! computed once per run and shared by every method that uses that λ. [`analyze`] applies
//! filters and fits to that data and is cheap, so reports can be regenerated from a saved
//! `runs.json` without simulating again.

mod io;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Benchmark, BenchmarkCircuit, CircuitError};
use crate::exec::{self, Parallelism};
use crate::extrapolation::{fit_samples, FitError, FitModel, FitOptions, FitParams, Sample};
use crate::filtering::{self, FilterOutcome, FilterReason};
use crate::folding::{assign_insertions, fold, twirl, FoldAssignment, FoldingError, ScaleFactor};
use crate::noise::{used_pairs, Epoch, NoiseError, NoiseProcess};
use crate::rng::{self, Purpose};
use crate::scaling::{
    build_plan, epsilon_from_p0, estimate_epsilon_from_calibration, measure_epsilon0, survival, ErrorEstimate,
    EstimateSource, ScalingError, ScalingPlan, DEFAULT_K, DEFAULT_XI,
};
use crate::sim::{self, Confusion, GateNoise, SimError};

pub use io::{
    read_runs_json, write_outputs, write_report_csv, write_report_json, write_report_outputs, write_runs_json, write_samples_csv, write_sweep_csv,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Folding(#[from] FoldingError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Where a method's scale factors come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanSource {
    /// Fixed odd integers.
    Standard,
    /// Adaptive, from the calibration-sum ε₀.
    Calibration,
    /// Adaptive, from the per-run measured ε₀.
    Measured,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "sZNE")]
    Szne,
    #[serde(rename = "ASF-M")]
    AsfM,
    #[serde(rename = "ASF-B")]
    AsfB,
    #[serde(rename = "IC-ZNE")]
    IcZne,
    #[serde(rename = "IC-ZNE+ASF-M")]
    IcZneAsfM,
    #[serde(rename = "IC-ZNE+ASF-B")]
    IcZneAsfB,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Szne, Method::AsfM, Method::AsfB, Method::IcZne, Method::IcZneAsfM, Method::IcZneAsfB];

    pub fn name(self) -> &'static str {
        match self {
            Method::Szne => "sZNE",
            Method::AsfM => "ASF-M",
            Method::AsfB => "ASF-B",
            Method::IcZne => "IC-ZNE",
            Method::IcZneAsfM => "IC-ZNE+ASF-M",
            Method::IcZneAsfB => "IC-ZNE+ASF-B",
        }
    }

    pub fn plan_source(self) -> PlanSource {
        match self {
            Method::Szne | Method::IcZne => PlanSource::Standard,
            Method::AsfM | Method::IcZneAsfM => PlanSource::Calibration,
            Method::AsfB | Method::IcZneAsfB => PlanSource::Measured,
        }
    }

    /// Extrapolates linearly in measured ε instead of exponentially in λ.
    pub fn is_error_calibrated(self) -> bool {
        matches!(self, Method::IcZne | Method::IcZneAsfM | Method::IcZneAsfB)
    }

    pub fn fit_model(self) -> FitModel {
        if self.is_error_calibrated() {
            FitModel::Linear
        } else {
            FitModel::Exponential
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Method, HarnessError> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| HarnessError::Unknown { kind: "method", name: s.to_string() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    None,
    /// GMM + 2σ on expectation values, per λ group across runs.
    Global,
    /// GMM + 2σ on measured ε₀, whole runs.
    Epsilon0,
    /// 2D Gaussian on (value, ε), per run and λ.
    Local2D,
    /// 2D Gaussian on (value, ε), per λ group across runs.
    Global2D,
}

impl FilterKind {
    pub const ALL: [FilterKind; 5] =
        [FilterKind::None, FilterKind::Global, FilterKind::Epsilon0, FilterKind::Local2D, FilterKind::Global2D];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::None => "none",
            FilterKind::Global => "global",
            FilterKind::Epsilon0 => "epsilon0",
            FilterKind::Local2D => "local2d",
            FilterKind::Global2D => "global2d",
        }
    }

    /// The 2D filters need a per-sample ε, which only error-calibrated methods measure.
    pub fn applies_to(self, method: Method) -> bool {
        !matches!(self, FilterKind::Local2D | FilterKind::Global2D) || method.is_error_calibrated()
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<FilterKind, HarnessError> {
        FilterKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| HarnessError::Unknown { kind: "filter", name: s.to_string() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub benchmark: Benchmark,
    pub runs: usize,
    pub twirls: usize,
    /// Shots per (λ, twirl) expectation value.
    pub shots: u64,
    /// Shots per circuit + inverse survival measurement.
    pub eps_shots: u64,
    pub xi: f64,
    pub k: usize,
    /// Raise λ_max to the smallest value that still yields k realizable factors.
    pub clamp_lambda_max: bool,
    pub standard_factors: Vec<i64>,
    pub methods: Vec<Method>,
    pub filters: Vec<FilterKind>,
    pub fit: FitOptions,
    pub noise: NoiseProcess,
    /// Seeds every stream except the noise epochs, which use `noise.seed`.
    pub seed: u64,
    #[serde(default)]
    pub parallelism: Parallelism,
}

impl ExperimentConfig {
    /// 50 runs × 16 twirls × 625 shots, all methods and filters.
    pub fn new(benchmark: Benchmark, noise: NoiseProcess, seed: u64) -> ExperimentConfig {
        let weights = benchmark.build().observable.weights().to_vec();
        let range = weights.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &w| (l.min(w), h.max(w)));
        ExperimentConfig {
            benchmark,
            runs: 50,
            twirls: 16,
            shots: 625,
            eps_shots: 10_000,
            xi: DEFAULT_XI,
            k: DEFAULT_K,
            clamp_lambda_max: true,
            standard_factors: vec![1, 3, 5],
            methods: Method::ALL.to_vec(),
            filters: FilterKind::ALL.to_vec(),
            fit: FitOptions { value_range: Some(range), ..FitOptions::default() },
            noise,
            seed,
            parallelism: Parallelism::default(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.runs == 0 || self.twirls == 0 {
            return bad("runs and twirls must be >= 1".into());
        }
        if self.shots == 0 || self.eps_shots == 0 {
            return bad("shots and eps_shots must be >= 1".into());
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return bad(format!("xi {} must be finite and > 0", self.xi));
        }
        if self.k < 2 {
            return bad(format!("k = {} must be >= 2", self.k));
        }
        if self.methods.is_empty() || self.filters.is_empty() {
            return bad("at least one method and one filter are required".into());
        }
        if self.standard_factors.len() < 2 || self.standard_factors.iter().any(|&f| f < 1 || f % 2 == 0) {
            return bad(format!("standard factors {:?} must be >= 2 odd integers", self.standard_factors));
        }
        self.noise.validate()?;
        Ok(())
    }
}

/// One expectation value at one (λ, twirl).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSample {
    pub lambda: ScaleFactor,
    pub twirl: u32,
    pub insertions: Vec<u32>,
    pub value: f64,
    /// Measured error strength of this folded, twirled circuit; only for λ used by
    /// error-calibrated methods. `None` also when the survival was below the estimator's domain.
    pub epsilon: Option<f64>,
    pub p0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: u64,
    pub epoch: Epoch,
    /// Measured base error strength; `None` if the survival fell outside the estimator's domain.
    pub epsilon0: Option<ErrorEstimate>,
    pub plans: BTreeMap<Method, ScalingPlan>,
    /// Ordered by λ, then twirl.
    pub samples: Vec<LambdaSample>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbortedRun {
    pub run_id: u64,
    pub error: String,
}

/// Everything [`analyze`] needs; the content of `runs.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentData {
    pub config: ExperimentConfig,
    pub ideal: f64,
    pub calibration_estimate: Option<ErrorEstimate>,
    pub runs: Vec<RunRecord>,
    pub aborted: Vec<AbortedRun>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunEstimate {
    pub run_id: u64,
    pub value: f64,
    pub model: FitModel,
    pub params: FitParams,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub filter: FilterKind,
    /// Over runs with an estimate; `None` if there are none.
    pub rmse: Option<f64>,
    /// Relative to sZNE without filtering.
    pub reduction_pct: Option<f64>,
    pub retained_runs: usize,
    pub total_runs: usize,
    pub retained_samples: usize,
    pub total_samples: usize,
    pub eps0_source: Option<EstimateSource>,
    pub mean_lambda_max: f64,
    pub clamped_runs: usize,
    /// Mean over runs of the unfiltered mean value at each run's largest λ.
    pub mean_value_at_max_lambda: f64,
    pub estimates: Vec<RunEstimate>,
}

/// Retention decision for one sample under one (method, filter).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleFlag {
    pub run_id: u64,
    pub method: Method,
    pub filter: FilterKind,
    pub lambda_index: usize,
    pub lambda: ScaleFactor,
    pub twirl: u32,
    pub x: f64,
    pub value: f64,
    pub retained: bool,
    pub reason: FilterReason,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub benchmark: Benchmark,
    pub ideal: f64,
    pub runs_completed: usize,
    pub aborted: Vec<AbortedRun>,
    pub rows: Vec<ReportRow>,
    pub samples: Vec<SampleFlag>,
}

impl ExperimentReport {
    pub fn row(&self, method: Method, filter: FilterKind) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method && r.filter == filter)
    }

    pub fn rmse(&self, method: Method, filter: FilterKind) -> Option<f64> {
        self.row(method, filter).and_then(|r| r.rmse)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub data: ExperimentData,
    pub report: ExperimentReport,
}

/// Root-mean-square deviation of `estimates` from `ideal`; `None` when empty.
pub fn rmse(estimates: &[f64], ideal: f64) -> Option<f64> {
    if estimates.is_empty() {
        return None;
    }
    Some((estimates.iter().map(|e| (e - ideal).powi(2)).sum::<f64>() / estimates.len() as f64).sqrt())
}

/// 100·(1 − rmse/baseline); `None` when the baseline is zero or missing.
pub fn error_reduction(rmse: f64, baseline: f64) -> Option<f64> {
    (baseline > 0.0).then(|| 100.0 * (1.0 - rmse / baseline))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment, HarnessError> {
    let data = simulate(config)?;
    let report = analyze(&data)?;
    Ok(Experiment { data, report })
}

struct RunContext<'a> {
    config: &'a ExperimentConfig,
    bench: &'a BenchmarkCircuit,
    readout: Option<Vec<Confusion>>,
    calibration: Option<&'a ErrorEstimate>,
}

pub fn simulate(config: &ExperimentConfig) -> Result<ExperimentData, HarnessError> {
    config.validate()?;
    let bench = config.benchmark.build();
    let missing: Vec<_> = used_pairs(&bench.circuit, &bench.layout)
        .into_iter()
        .filter(|p| config.noise.base.cx_error(*p).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(HarnessError::Config(format!("calibration table lacks CX rates for {missing:?}")));
    }
    let calibration = estimate_epsilon_from_calibration(&bench.circuit, &config.noise.base, &bench.layout).ok();
    let ctx = RunContext {
        config,
        bench: &bench,
        readout: config.noise.readout_confusion(&bench.layout)?,
        calibration: calibration.as_ref(),
    };
    let results = exec::map_indexed(config.runs, config.parallelism, |r| simulate_run(&ctx, r as u64));
    let mut runs = Vec::with_capacity(config.runs);
    let mut aborted = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(rec) => runs.push(rec),
            Err(e) => {
                log::warn!("run {r} aborted: {e}");
                aborted.push(AbortedRun { run_id: r as u64, error: e.to_string() });
            }
        }
    }
    Ok(ExperimentData { config: config.clone(), ideal: bench.observable.ideal_value(), calibration_estimate: calibration, runs, aborted })
}

fn adaptive_plan(
    config: &ExperimentConfig,
    n_cnots: usize,
    estimate: Option<&ErrorEstimate>,
    notes: &mut Vec<String>,
    method: Method,
) -> ScalingPlan {
    let Some(est) = estimate else {
        notes.push(format!("{method}: no error estimate, unscaled"));
        return ScalingPlan::unscaled(None);
    };
    match build_plan(n_cnots, est, config.xi, config.k, config.clamp_lambda_max) {
        Ok(p) => p,
        Err(e) => {
            notes.push(format!("{method}: {e}; unscaled"));
            ScalingPlan::unscaled(Some(est.epsilon0))
        }
    }
}

fn simulate_run(ctx: &RunContext<'_>, run_id: u64) -> Result<RunRecord, HarnessError> {
    let cfg = ctx.config;
    let circuit = &ctx.bench.circuit;
    let readout = ctx.readout.as_deref();
    let epoch = cfg.noise.sample_epoch(run_id);
    let noise = GateNoise::from_epoch(&epoch, &ctx.bench.layout, &cfg.noise)?;
    let mut notes = Vec::new();

    let mut rng = rng::stream(cfg.seed, Purpose::Epsilon0, &[run_id]);
    let epsilon0 = match measure_epsilon0(circuit, &noise, readout, cfg.eps_shots, &mut rng) {
        Ok(e) => Some(e),
        Err(ScalingError::P0OutOfDomain { p0, .. }) => {
            notes.push(format!("measured P0 = {p0} below estimator domain"));
            None
        }
        Err(e) => return Err(e.into()),
    };

    let n_cnots = circuit.cnot_count();
    let mut plans = BTreeMap::new();
    for &m in &cfg.methods {
        let plan = match m.plan_source() {
            PlanSource::Standard => ScalingPlan::fixed(&cfg.standard_factors),
            PlanSource::Calibration => adaptive_plan(cfg, n_cnots, ctx.calibration, &mut notes, m),
            PlanSource::Measured => adaptive_plan(cfg, n_cnots, epsilon0.as_ref(), &mut notes, m),
        };
        plans.insert(m, plan);
    }
    let lambdas: BTreeSet<ScaleFactor> = plans.values().flat_map(|p| p.lambdas.iter().copied()).collect();
    let eps_lambdas: BTreeSet<ScaleFactor> = plans
        .iter()
        .filter(|(m, _)| m.is_error_calibrated())
        .flat_map(|(_, p)| p.lambdas.iter().copied())
        .collect();

    let mut samples = Vec::with_capacity(lambdas.len() * cfg.twirls);
    for &lambda in &lambdas {
        let r = lambda.ratio();
        for t in 0..cfg.twirls as u32 {
            let key = [run_id, *r.numer() as u64, *r.denom() as u64, t as u64];
            let assignment = if lambda == ScaleFactor::ONE {
                FoldAssignment::identity(n_cnots)
            } else {
                assign_insertions(lambda, n_cnots, &mut rng::stream(cfg.seed, Purpose::Assignment, &key))?
            };
            let folded = fold(circuit, &assignment)?;
            let twirled = twirl(&folded, &mut rng::stream(cfg.seed, Purpose::Twirl, &key));
            let rho = sim::evolve(&twirled, &noise)?;
            let counts = sim::measure_counts(&rho, cfg.shots, readout, &mut rng::stream(cfg.seed, Purpose::Shots, &key))?;
            let value = match readout {
                Some(c) => sim::readout_mitigate(&counts, c)?.expectation(&ctx.bench.observable)?,
                None => sim::expectation(&counts, &ctx.bench.observable)?,
            };
            let (epsilon, p0) = if eps_lambdas.contains(&lambda) {
                let mirrored = twirled.compose(&twirled.invert()?)?;
                let mut srng = rng::stream(cfg.seed, Purpose::InvertedShots, &key);
                let p0 = survival(&mirrored, &noise, readout, cfg.eps_shots, &mut srng)?;
                (epsilon_from_p0(p0, circuit.width()).ok(), Some(p0))
            } else {
                (None, None)
            };
            samples.push(LambdaSample { lambda, twirl: t, insertions: assignment.insertions, value, epsilon, p0 });
        }
    }
    Ok(RunRecord { run_id, epoch, epsilon0, plans, samples, notes })
}

/// A sample as seen by one method.
struct View<'a> {
    run: usize,
    lambda_index: usize,
    sample: &'a LambdaSample,
    x: f64,
}

fn method_view(data: &ExperimentData, method: Method) -> Vec<View<'_>> {
    let mut out = Vec::new();
    for (run, rec) in data.runs.iter().enumerate() {
        let Some(plan) = rec.plans.get(&method) else { continue };
        for s in &rec.samples {
            let Some(j) = plan.lambdas.iter().position(|l| *l == s.lambda) else { continue };
            let x = if method.is_error_calibrated() {
                match s.epsilon {
                    Some(e) => e,
                    None => continue,
                }
            } else {
                s.lambda.to_f64()
            };
            out.push(View { run, lambda_index: j, sample: s, x });
        }
    }
    out
}

/// Scatters per-group outcomes back onto the view.
fn scatter(reasons: &mut [FilterReason], groups: &BTreeMap<impl Ord, Vec<usize>>, outcomes: Vec<FilterOutcome>) {
    for (members, out) in groups.values().zip(outcomes) {
        for (&i, r) in members.iter().zip(out.reasons) {
            reasons[i] = r;
        }
    }
}

fn apply_filter(data: &ExperimentData, view: &[View<'_>], filter: FilterKind) -> Vec<FilterReason> {
    let mut reasons = vec![FilterReason::Kept; view.len()];
    match filter {
        FilterKind::None => {}
        FilterKind::Epsilon0 => {
            let runs: Vec<usize> = (0..data.runs.len()).filter(|&r| data.runs[r].epsilon0.is_some()).collect();
            let eps: Vec<f64> = runs.iter().map(|&r| data.runs[r].epsilon0.as_ref().map_or(0.0, |e| e.epsilon0)).collect();
            let out = filtering::filter_runs_epsilon0(&eps);
            let mut by_run = vec![FilterReason::DegeneratePassthrough; data.runs.len()];
            for (&r, reason) in runs.iter().zip(out.reasons) {
                by_run[r] = reason;
            }
            for (i, v) in view.iter().enumerate() {
                reasons[i] = by_run[v.run];
            }
        }
        FilterKind::Global => {
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, v) in view.iter().enumerate() {
                groups.entry(v.lambda_index).or_default().push(i);
            }
            let values: Vec<Vec<f64>> = groups.values().map(|m| m.iter().map(|&i| view[i].sample.value).collect()).collect();
            scatter(&mut reasons, &groups, filtering::filter_global(&values));
        }
        FilterKind::Local2D | FilterKind::Global2D => {
            let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
            for (i, v) in view.iter().enumerate() {
                let run = if filter == FilterKind::Local2D { v.run } else { 0 };
                groups.entry((run, v.lambda_index)).or_default().push(i);
            }
            let outcomes = groups
                .values()
                .map(|m| {
                    let pts: Vec<(f64, f64)> = m.iter().map(|&i| (view[i].sample.value, view[i].x)).collect();
                    filtering::filter_2d(&pts).0
                })
                .collect();
            scatter(&mut reasons, &groups, outcomes);
        }
    }
    reasons
}

/// Filters and fits every configured (method, filter) pair.
pub fn analyze(data: &ExperimentData) -> Result<ExperimentReport, HarnessError> {
    let cfg = &data.config;
    let mut rows = Vec::new();
    let mut flags = Vec::new();
    for &method in &cfg.methods {
        let view = method_view(data, method);
        let plans: Vec<&ScalingPlan> = data.runs.iter().filter_map(|r| r.plans.get(&method)).collect();
        let mean_lambda_max = plans.iter().map(|p| p.lambda_max).sum::<f64>() / plans.len().max(1) as f64;
        let clamped_runs = plans.iter().filter(|p| p.clamped).count();
        let mean_value_at_max_lambda = {
            let per_run: Vec<f64> = data
                .runs
                .iter()
                .filter_map(|rec| {
                    let top = *rec.plans.get(&method)?.lambdas.last()?;
                    let vals: Vec<f64> = rec.samples.iter().filter(|s| s.lambda == top).map(|s| s.value).collect();
                    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
                })
                .collect();
            per_run.iter().sum::<f64>() / per_run.len().max(1) as f64
        };
        for &filter in &cfg.filters {
            if !filter.applies_to(method) {
                continue;
            }
            let reasons = apply_filter(data, &view, filter);
            let mut per_run: Vec<Vec<(Sample, usize)>> = vec![Vec::new(); data.runs.len()];
            for (v, r) in view.iter().zip(&reasons) {
                let sample = Sample {
                    x: v.x,
                    value: v.sample.value,
                    run_id: data.runs[v.run].run_id,
                    twirl_id: v.sample.twirl,
                    retained: r.retained(),
                };
                per_run[v.run].push((sample, v.lambda_index));
                flags.push(SampleFlag {
                    run_id: data.runs[v.run].run_id,
                    method,
                    filter,
                    lambda_index: v.lambda_index,
                    lambda: v.sample.lambda,
                    twirl: v.sample.twirl,
                    x: v.x,
                    value: v.sample.value,
                    retained: r.retained(),
                    reason: *r,
                });
            }
            let mut estimates = Vec::new();
            for (run, samples) in per_run.iter().enumerate() {
                // A run the filter has cut down to fewer λ groups than it had (and fewer than
                // two) can no longer be extrapolated; it counts as rejected.
                let groups = |keep_all: bool| {
                    samples.iter().filter(|(s, _)| keep_all || s.retained).map(|(_, j)| *j).collect::<BTreeSet<_>>().len()
                };
                if groups(false) < groups(true).min(2) {
                    continue;
                }
                let samples: Vec<Sample> = samples.iter().map(|(s, _)| *s).collect();
                match fit_samples(&samples, method.fit_model(), &cfg.fit) {
                    Ok(fit) => estimates.push(RunEstimate {
                        run_id: data.runs[run].run_id,
                        value: fit.zero_noise_value,
                        model: fit.model(),
                        params: fit.params,
                        degenerate: fit.degenerate,
                    }),
                    Err(e) => log::warn!("{method}/{filter} run {}: fit failed: {e}", data.runs[run].run_id),
                }
            }
            let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
            rows.push(ReportRow {
                method,
                filter,
                rmse: rmse(&values, data.ideal),
                reduction_pct: None,
                retained_runs: estimates.len(),
                total_runs: data.runs.len(),
                retained_samples: reasons.iter().filter(|r| r.retained()).count(),
                total_samples: view.len(),
                eps0_source: (filter == FilterKind::Epsilon0).then_some(EstimateSource::Measured),
                mean_lambda_max,
                clamped_runs,
                mean_value_at_max_lambda,
                estimates,
            });
        }
    }
    let baseline = rows.iter().find(|r| r.method == Method::Szne && r.filter == FilterKind::None).and_then(|r| r.rmse);
    if let Some(b) = baseline {
        for row in &mut rows {
            row.reduction_pct = row.rmse.and_then(|r| error_reduction(r, b));
        }
    }
    Ok(ExperimentReport {
        benchmark: cfg.benchmark,
        ideal: data.ideal,
        runs_completed: data.runs.len(),
        aborted: data.aborted.clone(),
        rows,
        samples: flags,
    })
}

/// One (ξ, method, filter) point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub xi: f64,
    pub method: Method,
    pub filter: FilterKind,
    pub rmse: Option<f64>,
    pub reduction_pct: Option<f64>,
    pub mean_lambda_max: f64,
    pub mean_value_at_max_lambda: f64,
}

/// Repeats the experiment for each ξ in `grid` with otherwise identical configuration and seeds.
pub fn sweep_xi(config: &ExperimentConfig, grid: &[f64]) -> Result<Vec<SweepPoint>, HarnessError> {
    let mut out = Vec::new();
    for &xi in grid {
        let cfg = ExperimentConfig { xi, ..config.clone() };
        let report = run_experiment(&cfg)?.report;
        out.extend(report.rows.iter().map(|r| SweepPoint {
            xi,
            method: r.method,
            filter: r.filter,
            rmse: r.rmse,
            reduction_pct: r.reduction_pct,
            mean_lambda_max: r.mean_lambda_max,
            mean_value_at_max_lambda: r.mean_value_at_max_lambda,
        }));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::CalibrationTable;

    fn small(bench: Benchmark) -> ExperimentConfig {
        let b = bench.build();
        let table = CalibrationTable::uniform_for(&b.circuit, &b.layout, 0.01).unwrap();
        let mut cfg = ExperimentConfig::new(bench, NoiseProcess::stationary(table, 7), 11);
        cfg.runs = 3;
        cfg.twirls = 2;
        cfg.shots = 200;
        cfg.eps_shots = 500;
        cfg
    }

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        for f in FilterKind::ALL {
            assert_eq!(f.name().parse::<FilterKind>().unwrap(), f);
        }
        assert!("zne".parse::<Method>().is_err());
    }

    #[test]
    fn rmse_and_reduction() {
        assert_eq!(rmse(&[], 1.0), None);
        assert!((rmse(&[0.9, 1.1], 1.0).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(error_reduction(0.5, 1.0), Some(50.0));
        assert_eq!(error_reduction(0.5, 0.0), None);
    }

    #[test]
    fn samples_shared_and_complete() {
        let exp = run_experiment(&small(Benchmark::Grover)).unwrap();
        for rec in &exp.data.runs {
            let lambdas: BTreeSet<ScaleFactor> = rec.plans.values().flat_map(|p| p.lambdas.iter().copied()).collect();
            assert_eq!(rec.samples.len(), lambdas.len() * 2);
        }
        let row = exp.report.row(Method::Szne, FilterKind::None).unwrap();
        assert_eq!(row.retained_runs, 3);
        assert_eq!(row.reduction_pct, Some(0.0));
        assert!(exp.report.row(Method::Szne, FilterKind::Local2D).is_none());
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = small(Benchmark::Grover);
        cfg.standard_factors = vec![1, 2];
        assert!(matches!(simulate(&cfg), Err(HarnessError::Config(_))));
        let mut cfg = small(Benchmark::Grover);
        cfg.noise.base = CalibrationTable::uniform([(0, 1)], 0.01).unwrap();
        assert!(matches!(simulate(&cfg), Err(HarnessError::Config(_))));
    }
}
