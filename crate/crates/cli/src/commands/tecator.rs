use std::path::Path;

use locsparse::{grid_search, TuningGrid};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::fit::required;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, fmt, header, load_data, parse_tecator, LoadedData};
use crate::model::{fit_options, mean_check_loss, penalty_config, prepare, write_fit_outputs, ModelBundle, TauFit};

/// 31 equally spaced breakpoints on the mapped wavelength range.
pub const TECATOR_INTERVALS: usize = 30;

/// Normalizes the raw Tecator text file into `curves.csv` and `scalars.csv`.
pub fn cmd_convert_tecator(cfg: &RunConfig) -> CliResult<()> {
    let path = required(&cfg.tecator_file, "tecator_file")?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (curves, scalars) = parse_tecator(path, &text)?;
    std::fs::create_dir_all(&cfg.output).map_err(|e| CliError::io(&cfg.output, e))?;
    io::write_functional(&cfg.output.join("curves.csv"), &curves)?;
    io::write_scalars(&cfg.output.join("scalars.csv"), &scalars)
}

/// Train/tune/test row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub tune: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// File order: the first `train` rows, then `tune` rows, then `test` rows.
    pub fn official(n: usize, train: usize, tune: usize, test: usize) -> CliResult<Self> {
        if train == 0 || tune == 0 || test == 0 {
            return Err(CliError::Input("split sizes must be positive".into()));
        }
        if train + tune + test > n {
            return Err(CliError::Input(format!(
                "split sizes {train} + {tune} + {test} need {} rows, found {n}",
                train + tune + test
            )));
        }
        Ok(Self {
            train: (0..train).collect(),
            tune: (train..train + tune).collect(),
            test: (train + tune..train + tune + test).collect(),
        })
    }

    /// Uniform random partition of the first `train + tune + test` rows with the official sizes.
    pub fn random(n: usize, train: usize, tune: usize, test: usize, seed: u64) -> CliResult<Self> {
        Self::official(n, train, tune, test)?;
        let mut idx: Vec<usize> = (0..train + tune + test).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok(Self {
            train: idx[..train].to_vec(),
            tune: idx[train..train + tune].to_vec(),
            test: idx[train + tune..].to_vec(),
        })
    }

    /// Set name per row; rows outside the split are `unused`.
    pub fn labels(&self, n: usize) -> Vec<&'static str> {
        let mut out = vec!["unused"; n];
        for (set, name) in [(&self.train, "train"), (&self.tune, "tune"), (&self.test, "test")] {
            for &i in set {
                out[i] = name;
            }
        }
        out
    }
}

/// Per-`τ` outcome of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub bundle: ModelBundle,
    pub prediction_error: Vec<f64>,
    pub selection: Vec<(f64, f64)>,
}

/// Tunes on the tune rows, then scores the selected fit on the test rows by mean check loss.
pub fn run_split(data: &LoadedData, split: &Split, cfg: &RunConfig, intervals: usize) -> CliResult<SplitOutcome> {
    let train = data.subset(&split.train);
    let prep = prepare(&train, cfg, intervals)?;
    let mut bundle = ModelBundle {
        method: cfg.method,
        degree: cfg.degree,
        intervals,
        grid: data.grid.clone(),
        scalar_names: data.scalar_names.clone(),
        response: cfg.response_or("fat"),
        intercept: cfg.intercept,
        centering: prep.centering.clone(),
        fits: Vec::new(),
    };
    let tune = data.subset(&split.tune);
    let test = data.subset(&split.test);
    let tune_design = bundle.design(&tune)?;
    let test_design = bundle.design(&test)?;
    let mut y_tune = tune.y.clone().expect("response required");
    if let Some(c) = &prep.centering {
        y_tune.add_scalar_mut(-c.response);
    }
    let y_test = test.y.clone().expect("response required");
    let grid = TuningGrid::new(cfg.eta_grid.clone(), cfg.lambda1_grid.clone(), cfg.xi)?;
    let base = penalty_config(cfg, 0.0, 0.0, data.scalar_names.len(), intervals)?;
    let mut prediction_error = Vec::new();
    let mut selection = Vec::new();
    for &tau in &cfg.taus {
        let opts = fit_options(cfg, cfg.method, tau);
        let tr = grid_search((&prep.design, &prep.y), (&tune_design, &y_tune), &prep.mats, &grid, &opts, &base)?;
        let f = TauFit::from_result(&tr.best_fit);
        let y_hat = bundle.predict(&f, &test_design)?;
        prediction_error.push(mean_check_loss(&y_test, &y_hat, tau));
        selection.push((tr.best_eta, tr.best_lambda1));
        bundle.fits.push(f);
    }
    Ok(SplitOutcome {
        bundle,
        prediction_error,
        selection,
    })
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

#[derive(Debug, Clone)]
pub struct TecatorReport {
    pub official: SplitOutcome,
    pub partitions: Vec<SplitOutcome>,
}

/// Official split plus `partitions` random re-partitions of the same sizes.
pub fn cmd_tecator(cfg: &RunConfig) -> CliResult<TecatorReport> {
    let response = cfg.response_or("fat");
    let data = load_data(required(&cfg.curves, "curves")?, required(&cfg.scalars, "scalars")?, &response, true)?;
    let intervals = cfg.intervals_or(TECATOR_INTERVALS);
    let n = data.n();
    let official_split = Split::official(n, cfg.train_size, cfg.tune_size, cfg.test_size)?;
    let official = run_split(&data, &official_split, cfg, intervals)?;
    let out = &cfg.output;
    let extra = json!({
        "split": "official",
        "prediction_error": official.prediction_error,
        "selection": official.selection.iter().map(|(e, l)| json!({"eta": e, "lambda1": l})).collect::<Vec<_>>(),
    });
    write_fit_outputs(out, &official.bundle, cfg.curve_points, extra)?;
    let labels = official_split.labels(n);
    io::write_rows(
        &out.join("splits.csv"),
        &header(&["row", "set"]),
        labels.iter().enumerate().map(|(i, s)| vec![i.to_string(), s.to_string()]),
    )?;

    let mut partitions = Vec::with_capacity(cfg.partitions);
    let mut partition_rows = Vec::new();
    for p in 0..cfg.partitions {
        let split = Split::random(n, cfg.train_size, cfg.tune_size, cfg.test_size, cfg.seed.wrapping_add(p as u64))?;
        for (i, s) in split.labels(n).iter().enumerate() {
            partition_rows.push(vec![p.to_string(), i.to_string(), s.to_string()]);
        }
        partitions.push(run_split(&data, &split, cfg, intervals)?);
    }

    let mut rows = Vec::new();
    for (t, &tau) in cfg.taus.iter().enumerate() {
        rows.push(vec!["official".to_string(), fmt(tau), fmt(official.prediction_error[t])]);
        for (p, o) in partitions.iter().enumerate() {
            rows.push(vec![p.to_string(), fmt(tau), fmt(o.prediction_error[t])]);
        }
    }
    io::write_rows(&out.join("prediction_error.csv"), &header(&["split", "tau", "check_loss"]), rows)?;

    if !partitions.is_empty() {
        io::write_rows(&out.join("partitions.csv"), &header(&["partition", "row", "set"]), partition_rows)?;
        write_partition_summary(&out.join("random_partition_summary.csv"), cfg, &data, &partitions)?;
    }
    Ok(TecatorReport { official, partitions })
}

fn write_partition_summary(path: &Path, cfg: &RunConfig, data: &LoadedData, parts: &[SplitOutcome]) -> CliResult<()> {
    let mut rows = Vec::new();
    for (t, &tau) in cfg.taus.iter().enumerate() {
        let mut push = |name: String, vals: Vec<f64>| {
            let (m, s) = mean_sd(&vals);
            rows.push(vec![fmt(tau), name, fmt(m), fmt(s), vals.len().to_string()]);
        };
        if cfg.intercept {
            push(
                "mu".into(),
                parts
                    .iter()
                    .map(|o| {
                        let off = o.bundle.centering.as_ref().map_or(0.0, |c| c.response);
                        o.bundle.fits[t].coefficients.intercept().unwrap_or(0.0) + off
                    })
                    .collect(),
            );
        }
        for (k, name) in data.scalar_names.iter().enumerate() {
            push(
                format!("gamma_{name}"),
                parts.iter().map(|o| o.bundle.fits[t].coefficients.gamma()[k]).collect(),
            );
        }
        push("prediction_error".into(), parts.iter().map(|o| o.prediction_error[t]).collect());
    }
    io::write_rows(path, &header(&["tau", "quantity", "mean", "sd", "count"]), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let s = Split::official(240, 129, 43, 43).unwrap();
        assert_eq!((s.train.len(), s.tune.len(), s.test.len()), (129, 43, 43));
        assert_eq!(s.test.last(), Some(&214));
        assert_eq!(s.labels(240)[220], "unused");
        let r = Split::random(240, 129, 43, 43, 5).unwrap();
        assert_eq!((r.train.len(), r.tune.len(), r.test.len()), (129, 43, 43));
        let mut all: Vec<usize> = r.train.iter().chain(&r.tune).chain(&r.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..215).collect::<Vec<_>>());
        assert_eq!(r, Split::random(240, 129, 43, 43, 5).unwrap());
        assert_ne!(r, Split::random(240, 129, 43, 43, 6).unwrap());
        assert!(Split::official(100, 60, 40, 1).is_err());
    }
}
