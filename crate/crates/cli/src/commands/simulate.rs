use locsparse::simbench::{run_benchmark, BenchmarkConfig, BenchmarkReport, ErrorCase, ScenarioSpec};
use locsparse::{PenaltyKind, TuningGrid};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, fmt, fmt_opt, header};

pub fn benchmark_config(cfg: &RunConfig) -> CliResult<BenchmarkConfig> {
    let tau = cfg.taus[0];
    let error = match ErrorCase::from_id(cfg.error_case, tau)? {
        ErrorCase::Case1 { .. } => ErrorCase::Case1 { snr: cfg.snr },
        e => e,
    };
    let b = BenchmarkConfig {
        scenario: cfg.scenario,
        error,
        n: cfg.n,
        n_valid: cfg.n_valid,
        tau,
        methods: cfg.methods.clone(),
        replicates: cfg.replicates,
        seed: cfg.seed,
        grid: TuningGrid::new(cfg.eta_grid.clone(), cfg.lambda1_grid.clone(), cfg.xi)?,
        degree: cfg.degree,
        m_intervals: cfg.intervals_or(super::fit::DEFAULT_INTERVALS),
        rho_perturb: cfg.rho,
        conv_tol: cfg.conv_tol,
        max_iter: cfg.max_iter,
        zero_threshold: cfg.zero_threshold,
        threshold_mode: cfg.threshold_mode,
    };
    b.validate()?;
    Ok(b)
}

/// Runs the benchmark and writes `table.csv`, `per_replicate.csv` and `summary.json`.
///
/// With `verify_hierarchy`, any sparse-group grid fit that breaks the
/// hierarchy is reported as a numeric failure after the files are written.
pub fn cmd_simulate(cfg: &RunConfig, verify_hierarchy: bool) -> CliResult<BenchmarkReport> {
    let b = benchmark_config(cfg)?;
    let report = run_benchmark::<f64>(&b)?;
    write_report(&cfg.output, &report)?;
    if verify_hierarchy {
        let broken: usize = report
            .records
            .iter()
            .filter(|r| r.method.penalty() == PenaltyKind::SparseGroup)
            .map(|r| r.grid_hierarchy_violations)
            .sum();
        if broken > 0 {
            return Err(CliError::Numeric(format!("{broken} sparse-group fits broke the hierarchy")));
        }
    }
    Ok(report)
}

pub fn write_report(dir: &std::path::Path, report: &BenchmarkReport) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let c = &report.config;
    let rows = report.table.iter().map(|r| {
        vec![
            c.scenario.label().to_string(),
            c.error.id().to_string(),
            c.n.to_string(),
            fmt(c.tau),
            r.method.label().to_string(),
            r.metric.label().to_string(),
            r.k.map_or_else(|| "NA".to_string(), |k| k.to_string()),
            fmt(r.mean),
            fmt(r.sd),
            r.count.to_string(),
        ]
    });
    io::write_rows(
        &dir.join("table.csv"),
        &header(&["scenario", "case", "n", "tau", "method", "metric", "k", "mean", "sd", "count"]),
        rows,
    )?;

    let q = ScenarioSpec::new(c.scenario).q;
    let mut cols: Vec<String> = header(&[
        "replicate",
        "method",
        "best_eta",
        "best_lambda1",
        "best_score",
        "iterations",
        "converged",
        "hierarchy_violations",
        "grid_fits",
        "grid_hierarchy_violations",
        "rmse_gamma",
    ]);
    for name in ["ise0", "ise1", "ftpr", "ftnr"] {
        cols.extend((0..=q).map(|k| format!("{name}_{k}")));
    }
    cols.extend((1..=q).map(|k| format!("gamma_{k}")));
    let rows = report.records.iter().map(|r| {
        let m = &r.metrics;
        let mut row = vec![
            r.replicate.to_string(),
            r.method.label().to_string(),
            fmt(r.best_eta),
            fmt(r.best_lambda1),
            fmt(r.best_score),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.hierarchy_violations.to_string(),
            r.grid_fits.to_string(),
            r.grid_hierarchy_violations.to_string(),
            fmt(m.rmse_gamma),
        ];
        for v in [&m.ise0, &m.ise1, &m.ftpr, &m.ftnr] {
            row.extend(v.iter().map(|x| fmt_opt(*x)));
        }
        row.extend(r.gamma_hat.iter().map(|g| fmt(*g)));
        row
    });
    io::write_rows(&dir.join("per_replicate.csv"), &cols, rows)?;

    let summary = json!({
        "replicates": c.replicates,
        "records": report.records.len(),
        "failures": report.failures.len(),
        "failure_messages": report.failures,
        "config": c,
    });
    io::write_json(&dir.join("summary.json"), &summary)
}
