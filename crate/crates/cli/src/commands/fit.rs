use locsparse::{fit, grid_search, TuningGrid};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, fmt, load_data};
use crate::model::{fit_options, penalty_config, prepare, write_fit_outputs, ModelBundle, TauFit};

pub const DEFAULT_INTERVALS: usize = 70;

pub(crate) fn required<'a, T>(v: &'a Option<T>, key: &str) -> CliResult<&'a T> {
    v.as_ref().ok_or_else(|| CliError::Input(format!("configuration key {key} is required")))
}

/// Fits every configured `τ` at the configured `(λ1, η)`.
pub fn cmd_fit(cfg: &RunConfig) -> CliResult<ModelBundle> {
    let response = cfg.response_or("y");
    let data = load_data(required(&cfg.curves, "curves")?, required(&cfg.scalars, "scalars")?, &response, true)?;
    let intervals = cfg.intervals_or(DEFAULT_INTERVALS);
    let prep = prepare(&data, cfg, intervals)?;
    let q = data.scalar_names.len();
    let pen = penalty_config(cfg, cfg.lambda1, cfg.eta, q, intervals)?;
    let mut fits = Vec::new();
    for &tau in &cfg.taus {
        let res = fit(&prep.design, &prep.y, &prep.mats, &pen, &fit_options(cfg, cfg.method, tau))?;
        fits.push(TauFit::from_result(&res));
    }
    let bundle = ModelBundle {
        method: cfg.method,
        degree: cfg.degree,
        intervals,
        grid: data.grid.clone(),
        scalar_names: data.scalar_names.clone(),
        response,
        intercept: cfg.intercept,
        centering: prep.centering.clone(),
        fits,
    };
    write_fit_outputs(&cfg.output, &bundle, cfg.curve_points, json!({ "n": data.n() }))?;
    Ok(bundle)
}

/// Selects `(η, λ1)` per `τ` on a validation set, then writes the selected fits.
pub fn cmd_tune(cfg: &RunConfig) -> CliResult<ModelBundle> {
    let response = cfg.response_or("y");
    let train = load_data(required(&cfg.curves, "curves")?, required(&cfg.scalars, "scalars")?, &response, true)?;
    let valid = load_data(
        required(&cfg.valid_curves, "valid_curves")?,
        required(&cfg.valid_scalars, "valid_scalars")?,
        &response,
        true,
    )?;
    let intervals = cfg.intervals_or(DEFAULT_INTERVALS);
    let prep = prepare(&train, cfg, intervals)?;
    let q = train.scalar_names.len();
    let provisional = ModelBundle {
        method: cfg.method,
        degree: cfg.degree,
        intervals,
        grid: train.grid.clone(),
        scalar_names: train.scalar_names.clone(),
        response: response.clone(),
        intercept: cfg.intercept,
        centering: prep.centering.clone(),
        fits: Vec::new(),
    };
    let valid_design = provisional.design(&valid)?;
    let mut y_valid = valid.y.clone().expect("response required");
    if let Some(c) = &prep.centering {
        y_valid.add_scalar_mut(-c.response);
    }
    let grid = TuningGrid::new(cfg.eta_grid.clone(), cfg.lambda1_grid.clone(), cfg.xi)?;
    let base = penalty_config(cfg, 0.0, 0.0, q, intervals)?;
    let mut fits = Vec::new();
    let mut rows = Vec::new();
    let mut chosen = Vec::new();
    for &tau in &cfg.taus {
        let opts = fit_options(cfg, cfg.method, tau);
        let tr = grid_search((&prep.design, &prep.y), (&valid_design, &y_valid), &prep.mats, &grid, &opts, &base)?;
        for (i, &eta) in grid.eta_grid.iter().enumerate() {
            for (j, &lam) in grid.lambda1_grid.iter().enumerate() {
                rows.push(vec![fmt(tau), fmt(eta), fmt(lam), fmt(tr.score_table[(i, j)])]);
            }
        }
        chosen.push(json!({
            "tau": tau,
            "eta": tr.best_eta,
            "lambda1": tr.best_lambda1,
            "score": tr.best_score(),
            "grid_fits": tr.fits,
            "grid_hierarchy_violations": tr.hierarchy_violations,
        }));
        fits.push(TauFit::from_result(&tr.best_fit));
    }
    let bundle = ModelBundle { fits, ..provisional };
    write_fit_outputs(&cfg.output, &bundle, cfg.curve_points, json!({ "n": train.n(), "selection": chosen }))?;
    let header: Vec<String> = ["tau", "eta", "lambda1", "score"].iter().map(|s| s.to_string()).collect();
    io::write_rows(&cfg.output.join("tuning.csv"), &header, rows)?;
    Ok(bundle)
}

/// Predictions of a saved model; reports the mean check loss when the response is present.
pub fn cmd_predict(cfg: &RunConfig) -> CliResult<()> {
    let bundle = ModelBundle::load(required(&cfg.model, "model")?)?;
    let response = cfg.response.clone().unwrap_or_else(|| bundle.response.clone());
    let data = load_data(required(&cfg.curves, "curves")?, required(&cfg.scalars, "scalars")?, &response, false)?;
    let design = bundle.design(&data)?;
    std::fs::create_dir_all(&cfg.output).map_err(|e| CliError::io(&cfg.output, e))?;
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for f in &bundle.fits {
        let y_hat = bundle.predict(f, &design)?;
        for (i, v) in y_hat.iter().enumerate() {
            rows.push(vec![i.to_string(), fmt(f.tau), fmt(*v)]);
        }
        if let Some(y) = &data.y {
            errors.push(vec![fmt(f.tau), fmt(crate::model::mean_check_loss(y, &y_hat, f.tau))]);
        }
    }
    let header: Vec<String> = ["row", "tau", "prediction"].iter().map(|s| s.to_string()).collect();
    io::write_rows(&cfg.output.join("predictions.csv"), &header, rows)?;
    if !errors.is_empty() {
        let header: Vec<String> = ["tau", "check_loss"].iter().map(|s| s.to_string()).collect();
        io::write_rows(&cfg.output.join("prediction_error.csv"), &header, errors)?;
    }
    Ok(())
}
