//! Replicated benchmark: fresh training and validation samples per
//! replicate, validation tuning per method, metrics, aggregation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSpec, PenaltyMatrices};
use crate::design::build_design;
use crate::error::{Error, Result};
use crate::penalty::PenaltyConfig;
use crate::simbench::generate::{beta_projections, curve_basis, gen_sample, ErrorCase};
use crate::simbench::metrics::{metrics, MetricsReport};
use crate::simbench::scenario::{ScenarioId, ScenarioSpec};
use crate::solver::{FitOptions, Method, ThresholdMode};
use crate::tuning::{grid_search, TuningGrid};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub scenario: ScenarioId,
    pub error: ErrorCase,
    pub n: usize,
    pub n_valid: usize,
    pub tau: f64,
    pub methods: Vec<Method>,
    pub replicates: usize,
    /// Replicate `r` draws from a generator seeded with `seed + r`.
    pub seed: u64,
    pub grid: TuningGrid<f64>,
    pub degree: usize,
    pub m_intervals: usize,
    pub rho_perturb: f64,
    pub conv_tol: f64,
    pub max_iter: usize,
    pub zero_threshold: f64,
    pub threshold_mode: ThresholdMode,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        let fit = FitOptions::<f64>::default();
        Self {
            scenario: ScenarioId::I,
            error: ErrorCase::case1(),
            n: 300,
            n_valid: 500,
            tau: 0.5,
            methods: Method::ALL.to_vec(),
            replicates: 100,
            seed: 20240101,
            grid: TuningGrid::default(),
            degree: 3,
            m_intervals: 70,
            rho_perturb: fit.rho_perturb,
            conv_tol: fit.conv_tol,
            max_iter: fit.max_iter,
            zero_threshold: fit.zero_threshold,
            threshold_mode: fit.threshold_mode,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("at least one method is required".into()));
        }
        if self.n < 2 || self.n_valid < 1 {
            return Err(Error::InvalidArgument("sample sizes too small".into()));
        }
        self.grid.validate()?;
        self.fit_options::<f64>(Method::Proposed).validate()
    }

    pub fn fit_options<T: Real>(&self, method: Method) -> FitOptions<T> {
        FitOptions {
            rho_perturb: T::of(self.rho_perturb),
            conv_tol: T::of(self.conv_tol),
            max_iter: self.max_iter,
            zero_threshold: T::of(self.zero_threshold),
            threshold_mode: self.threshold_mode,
            ..FitOptions::for_method(method, T::of(self.tau))
        }
    }
}

/// Outcome of one method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub method: Method,
    pub metrics: MetricsReport,
    pub gamma_hat: Vec<f64>,
    pub best_eta: f64,
    pub best_lambda1: f64,
    pub best_score: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Hierarchy breaks in the selected fit.
    pub hierarchy_violations: usize,
    /// Grid fits performed and how many of them broke the hierarchy.
    pub grid_fits: usize,
    pub grid_hierarchy_violations: usize,
    /// Largest increase of the majorized objective between iterations of the selected fit.
    pub max_surrogate_increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub replicate: usize,
    pub method: Method,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricName {
    Ise0,
    Ise1,
    Ftpr,
    Ftnr,
    RmseGamma,
}

impl MetricName {
    pub fn label(self) -> &'static str {
        match self {
            Self::Ise0 => "ISE0",
            Self::Ise1 => "ISE1",
            Self::Ftpr => "fTPR",
            Self::Ftnr => "fTNR",
            Self::RmseGamma => "RMSE_gamma",
        }
    }
}

/// Mean and sample standard deviation of one table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: Method,
    pub metric: MetricName,
    /// Coefficient function index; `None` for `RMSE_γ`.
    pub k: Option<usize>,
    pub mean: f64,
    pub sd: f64,
    /// Replicates contributing a value.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub records: Vec<ReplicateRecord>,
    pub failures: Vec<FailureRecord>,
    pub table: Vec<AggregateRow>,
}

impl BenchmarkReport {
    pub fn cell(&self, method: Method, metric: MetricName, k: Option<usize>) -> Option<&AggregateRow> {
        self.table
            .iter()
            .find(|r| r.method == method && r.metric == metric && r.k == k)
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Mean and sd per (method, metric, k), in `methods` order. Not-applicable
/// entries are left out of their cell; a cell with no values is omitted.
pub fn aggregate(records: &[ReplicateRecord], methods: &[Method], q: usize) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for &method in methods {
        let recs: Vec<&ReplicateRecord> = records.iter().filter(|r| r.method == method).collect();
        let per_k: [(MetricName, fn(&MetricsReport) -> &Vec<Option<f64>>); 4] = [
            (MetricName::Ise0, |m| &m.ise0),
            (MetricName::Ise1, |m| &m.ise1),
            (MetricName::Ftpr, |m| &m.ftpr),
            (MetricName::Ftnr, |m| &m.ftnr),
        ];
        for (metric, get) in per_k {
            for k in 0..=q {
                let vals: Vec<f64> = recs.iter().filter_map(|r| get(&r.metrics).get(k).copied().flatten()).collect();
                if vals.is_empty() {
                    continue;
                }
                let (mean, sd) = mean_sd(&vals);
                rows.push(AggregateRow {
                    method,
                    metric,
                    k: Some(k),
                    mean,
                    sd,
                    count: vals.len(),
                });
            }
        }
        let vals: Vec<f64> = recs.iter().map(|r| r.metrics.rmse_gamma).collect();
        if !vals.is_empty() {
            let (mean, sd) = mean_sd(&vals);
            rows.push(AggregateRow {
                method,
                metric: MetricName::RmseGamma,
                k: None,
                mean,
                sd,
                count: vals.len(),
            });
        }
    }
    rows
}

struct Shared<T: Real> {
    scenario: ScenarioSpec,
    projections: nalgebra::DMatrix<f64>,
    spec: BasisSpec<T>,
    mats: PenaltyMatrices<T>,
}

fn shared<T: Real>(cfg: &BenchmarkConfig) -> Result<Shared<T>> {
    let scenario = ScenarioSpec::new(cfg.scenario);
    let projections = beta_projections(&scenario, &curve_basis())?;
    let spec = BasisSpec::new(cfg.degree, cfg.m_intervals, T::of(scenario.domain_end()))?;
    let mats = PenaltyMatrices::new(&spec);
    Ok(Shared {
        scenario,
        projections,
        spec,
        mats,
    })
}

fn replicate_inner<T: Real>(
    cfg: &BenchmarkConfig,
    sh: &Shared<T>,
    r: usize,
) -> (Vec<ReplicateRecord>, Vec<FailureRecord>) {
    let fail_all = |msg: String| {
        let failures = cfg
            .methods
            .iter()
            .map(|&method| FailureRecord {
                replicate: r,
                method,
                message: msg.clone(),
            })
            .collect();
        (Vec::new(), failures)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r as u64));
    let data = (|| -> Result<_> {
        let train = gen_sample(cfg.n, &sh.scenario, &sh.projections, cfg.error, &mut rng)?;
        let valid = gen_sample(cfg.n_valid, &sh.scenario, &sh.projections, cfg.error, &mut rng)?;
        let dt = build_design(&train.dataset::<T>()?, &sh.spec, false)?;
        let dv = build_design(&valid.dataset::<T>()?, &sh.spec, false)?;
        let yt = train.response.y.map(T::of);
        let yv = valid.response.y.map(T::of);
        Ok((dt, yt, dv, yv))
    })();
    let (dt, yt, dv, yv) = match data {
        Ok(d) => d,
        Err(e) => return fail_all(format!("data generation failed: {e}")),
    };
    let grid = TuningGrid {
        eta_grid: cfg.grid.eta_grid.iter().map(|&v| T::of(v)).collect(),
        lambda1_grid: cfg.grid.lambda1_grid.iter().map(|&v| T::of(v)).collect(),
        xi_fixed: T::of(cfg.grid.xi_fixed),
    };
    let q = sh.scenario.q;
    let base = match PenaltyConfig::from_rule(T::zero(), T::zero(), q, cfg.m_intervals) {
        Ok(b) => b,
        Err(e) => return fail_all(e.to_string()),
    };

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for &method in &cfg.methods {
        let opts = cfg.fit_options::<T>(method);
        let outcome = grid_search((&dt, &yt), (&dv, &yv), &sh.mats, &grid, &opts, &base).and_then(|tr| {
            let m = metrics(&tr.best_fit.coeffs, &sh.scenario, &sh.spec)?;
            Ok((tr, m))
        });
        match outcome {
            Ok((tr, m)) => {
                let fit = &tr.best_fit;
                let max_surrogate_increase = fit
                    .surrogate_trace
                    .windows(2)
                    .map(|w| (w[1] - w[0]).as_f64())
                    .fold(f64::NEG_INFINITY, f64::max);
                records.push(ReplicateRecord {
                    replicate: r,
                    method,
                    gamma_hat: fit.coeffs.gamma().iter().map(|v| v.as_f64()).collect(),
                    metrics: m,
                    best_eta: tr.best_eta.as_f64(),
                    best_lambda1: tr.best_lambda1.as_f64(),
                    best_score: tr.best_score().as_f64(),
                    iterations: fit.iterations,
                    converged: fit.converged,
                    hierarchy_violations: fit.hierarchy_violations().len(),
                    grid_fits: tr.fits,
                    grid_hierarchy_violations: tr.hierarchy_violations,
                    max_surrogate_increase,
                });
            }
            Err(e) => failures.push(FailureRecord {
                replicate: r,
                method,
                message: e.to_string(),
            }),
        }
    }
    (records, failures)
}

/// Runs replicate `r` of `cfg` for every configured method.
pub fn run_replicate<T: Real>(cfg: &BenchmarkConfig, r: usize) -> Result<(Vec<ReplicateRecord>, Vec<FailureRecord>)> {
    cfg.validate()?;
    let sh = shared::<T>(cfg)?;
    Ok(replicate_inner(cfg, &sh, r))
}

/// Runs all replicates (concurrently, gathered by index) and aggregates them.
pub fn run_benchmark<T: Real>(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let sh = shared::<T>(cfg)?;
    let per: Vec<(Vec<ReplicateRecord>, Vec<FailureRecord>)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| replicate_inner(cfg, &sh, r))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (rec, fail) in per {
        records.extend(rec);
        failures.extend(fail);
    }
    let table = aggregate(&records, &cfg.methods, sh.scenario.q);
    Ok(BenchmarkReport {
        config: cfg.clone(),
        records,
        failures,
        table,
    })
}
