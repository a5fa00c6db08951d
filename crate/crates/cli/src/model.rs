//! Fitted-model bundle shared by `fit`, `tune`, `predict`, `diagnose` and `tecator`.

use std::path::Path;

use locsparse::solver::{predict_coefficients, reconstruct_coefficients};
use locsparse::{
    build_basis, build_design, center_columns, check_loss, BasisSpec, CenteringOffsets, Coefficients, Dataset,
    DesignMatrices, FitOptions, FitResult, Method, PenaltyConfig, PenaltyMatrices,
};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, fmt, LoadedData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauFit {
    pub tau: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub eta: f64,
    pub xi: f64,
    pub coefficients: Coefficients<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Per-iteration penalized objective.
    pub objective_trace: Vec<f64>,
    /// `masks[k][l]`: `β̂_k` vanishes on interval `l`.
    pub masks: Vec<Vec<bool>>,
}

impl TauFit {
    pub fn from_result(res: &FitResult<f64>) -> Self {
        Self {
            tau: res.tau,
            lambda1: res.config.lambda1,
            lambda2: res.config.lambda2,
            eta: res.config.eta,
            xi: res.config.xi,
            coefficients: res.coeffs.clone(),
            iterations: res.iterations,
            converged: res.converged,
            objective_trace: res.objective_trace.clone(),
            masks: res.interval_masks.clone(),
        }
    }

    pub fn hierarchy_violations(&self) -> Vec<usize> {
        locsparse::solver::hierarchy_violations(&self.masks)
    }
}

/// Everything needed to evaluate a fitted model on new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub method: Method,
    pub degree: usize,
    pub intervals: usize,
    /// Original sampling grid; curves are mapped affinely onto `[0, 1]`.
    pub grid: Vec<f64>,
    pub scalar_names: Vec<String>,
    pub response: String,
    pub intercept: bool,
    pub centering: Option<CenteringOffsets<f64>>,
    pub fits: Vec<TauFit>,
}

impl ModelBundle {
    pub fn spec(&self) -> CliResult<BasisSpec<f64>> {
        Ok(build_basis(self.degree, self.intervals, 1.0)?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let b: Self = io::read_json(path)?;
        if b.fits.is_empty() {
            return Err(CliError::Input(format!("{}: model bundle holds no fits", path.display())));
        }
        Ok(b)
    }

    /// Design for new data in the bundle's coordinates (centering applied).
    pub fn design(&self, data: &LoadedData) -> CliResult<DesignMatrices<f64>> {
        if data.grid.len() != self.grid.len()
            || data.grid.iter().zip(&self.grid).any(|(a, b)| (a - b).abs() > 1e-9 * b.abs().max(1.0))
        {
            return Err(CliError::Input(format!(
                "sampling grid does not match the model's ({} vs {} points)",
                data.grid.len(),
                self.grid.len()
            )));
        }
        if data.scalar_names != self.scalar_names {
            return Err(CliError::Input(format!(
                "scalar columns {:?} do not match the model's {:?}",
                data.scalar_names, self.scalar_names
            )));
        }
        let mut ds = data.dataset()?;
        if let Some(c) = &self.centering {
            ds = c.apply(&ds)?;
        }
        Ok(build_design(&ds, &self.spec()?, self.intercept)?)
    }

    /// Predictions on the original response scale.
    pub fn predict(&self, fit: &TauFit, design: &DesignMatrices<f64>) -> CliResult<DVector<f64>> {
        let mut y = predict_coefficients(&fit.coefficients, design)?;
        if let Some(c) = &self.centering {
            y.add_scalar_mut(c.response);
        }
        Ok(y)
    }
}

/// Training inputs shared by the fitting subcommands.
pub struct Prepared {
    pub spec: BasisSpec<f64>,
    pub mats: PenaltyMatrices<f64>,
    pub design: DesignMatrices<f64>,
    pub y: DVector<f64>,
    pub centering: Option<CenteringOffsets<f64>>,
}

pub fn prepare(data: &LoadedData, cfg: &RunConfig, intervals: usize) -> CliResult<Prepared> {
    let spec = build_basis(cfg.degree, intervals, 1.0)?;
    let mats = PenaltyMatrices::new(&spec);
    let mut ds: Dataset<f64> = data.dataset()?;
    let mut centering = None;
    if cfg.center {
        let (c, off) = center_columns(&ds)?;
        ds = c;
        centering = Some(off);
    }
    let design = build_design(&ds, &spec, cfg.intercept)?;
    let y = ds.response.clone();
    Ok(Prepared {
        spec,
        mats,
        design,
        y,
        centering,
    })
}

pub fn fit_options(cfg: &RunConfig, method: Method, tau: f64) -> FitOptions<f64> {
    FitOptions {
        rho_perturb: cfg.rho,
        max_iter: cfg.max_iter,
        conv_tol: cfg.conv_tol,
        zero_threshold: cfg.zero_threshold,
        threshold_mode: cfg.threshold_mode,
        ..FitOptions::for_method(method, tau)
    }
}

/// Penalty configuration with `λ2 = √(q+1) λ1` and `κ = M`.
pub fn penalty_config(cfg: &RunConfig, lambda1: f64, eta: f64, q: usize, intervals: usize) -> CliResult<PenaltyConfig<f64>> {
    let mut p = PenaltyConfig::from_rule(lambda1, eta, q, intervals)?;
    p.xi = cfg.xi;
    p.validate()?;
    Ok(p)
}

/// Mean check loss of `y - ŷ`.
pub fn mean_check_loss(y: &DVector<f64>, y_hat: &DVector<f64>, tau: f64) -> f64 {
    y.iter().zip(y_hat.iter()).map(|(&a, &b)| check_loss(a - b, tau)).sum::<f64>() / y.len() as f64
}

/// Writes `coefficients.json`, `beta_curves.csv`, `masks.csv` and `summary.json`.
pub fn write_fit_outputs(dir: &Path, bundle: &ModelBundle, curve_points: usize, extra: serde_json::Value) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    io::write_json(&dir.join("coefficients.json"), bundle)?;

    let spec = bundle.spec()?;
    let q = bundle.scalar_names.len();
    let unit: Vec<f64> = (0..curve_points)
        .map(|i| if i + 1 == curve_points { 1.0 } else { i as f64 / (curve_points - 1) as f64 })
        .collect();
    let (lo, hi) = (bundle.grid[0], bundle.grid[bundle.grid.len() - 1]);
    let mut header: Vec<String> = vec!["tau".into(), "t".into(), "t_original".into()];
    header.extend((0..=q).map(|k| format!("beta_{k}")));
    let mut rows = Vec::new();
    for f in &bundle.fits {
        let curves = reconstruct_coefficients(&f.coefficients, &spec, &unit)?;
        for (g, &t) in unit.iter().enumerate() {
            let mut r = vec![fmt(f.tau), fmt(t), fmt(lo + (hi - lo) * t)];
            r.extend((0..=q).map(|k| fmt(curves[(k, g)])));
            rows.push(r);
        }
    }
    io::write_rows(&dir.join("beta_curves.csv"), &header, rows)?;

    let m = bundle.intervals;
    let header: Vec<String> = ["tau", "k", "interval", "t_lo", "t_hi", "null"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for f in &bundle.fits {
        for (k, mask) in f.masks.iter().enumerate() {
            for (l, &z) in mask.iter().enumerate() {
                rows.push(vec![
                    fmt(f.tau),
                    k.to_string(),
                    l.to_string(),
                    fmt(l as f64 / m as f64),
                    fmt((l + 1) as f64 / m as f64),
                    u8::from(z).to_string(),
                ]);
            }
        }
    }
    io::write_rows(&dir.join("masks.csv"), &header, rows)?;

    let fits: Vec<serde_json::Value> = bundle
        .fits
        .iter()
        .map(|f| {
            let gamma: serde_json::Map<String, serde_json::Value> = bundle
                .scalar_names
                .iter()
                .zip(f.coefficients.gamma())
                .map(|(n, g)| (n.clone(), serde_json::json!(g)))
                .collect();
            let mu = f.coefficients.intercept().map(|m| m + bundle.centering.as_ref().map_or(0.0, |c| c.response));
            serde_json::json!({
                "tau": f.tau,
                "mu": mu,
                "gamma": gamma,
                "lambda1": f.lambda1,
                "lambda2": f.lambda2,
                "eta": f.eta,
                "iterations": f.iterations,
                "converged": f.converged,
                "hierarchy_violations": f.hierarchy_violations(),
                "objective_trace": f.objective_trace,
            })
        })
        .collect();
    let summary = serde_json::json!({
        "method": bundle.method.label(),
        "response": bundle.response,
        "fits": fits,
        "extra": extra,
    });
    io::write_json(&dir.join("summary.json"), &summary)
}

/// Reads `masks.csv` back and lists `(tau, interval)` pairs that break the hierarchy.
pub fn verify_masks(path: &Path) -> CliResult<(usize, Vec<(String, usize)>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut entries: std::collections::BTreeMap<(String, usize), (bool, bool)> = Default::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let parse = |i: usize| -> CliResult<usize> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::Input(format!("{}: malformed row {:?}", path.display(), rec)))
        };
        let (k, l, null) = (parse(1)?, parse(2)?, parse(5)? == 1);
        let e = entries.entry((rec[0].to_string(), l)).or_insert((false, false));
        if k == 0 {
            e.0 = null;
        } else if !null {
            e.1 = true;
        }
    }
    let bad = entries
        .iter()
        .filter(|(_, (main_null, inter_nonzero))| *main_null && *inter_nonzero)
        .map(|(key, _)| key.clone())
        .collect();
    Ok((entries.len(), bad))
}
