use locsparse::{fit, PenaltyConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fit::required;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, fmt, header, load_data};
use crate::model::{fit_options, ModelBundle};

/// Rule-of-thumb Gaussian bandwidth `0.9 min(sd, IQR/1.34) n^(-1/5)`.
pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * n.powf(-0.2);
    if h > 0.0 {
        h
    } else {
        1e-3 * mean.abs().max(1.0)
    }
}

/// Linear-interpolation sample quantile of sorted data.
pub fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let pos = p.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

/// Gaussian kernel density of `x` on `points` equally spaced values spanning
/// the data plus three bandwidths on each side.
pub fn kde(x: &[f64], points: usize) -> Vec<(f64, f64)> {
    let h = silverman_bandwidth(x);
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let norm = 1.0 / (x.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    (0..points)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let d = x.iter().map(|v| (-0.5 * ((t - v) / h).powi(2)).exp()).sum::<f64>() * norm;
            (t, d)
        })
        .collect()
}

/// Simulated responses: draw `τ̆ ~ U(0, 1)`, refit at `τ̆`, predict at a random row.
pub fn qq_simulation(
    bundle: &ModelBundle,
    design: &locsparse::DesignMatrices<f64>,
    y: &nalgebra::DVector<f64>,
    cfg: &RunConfig,
    draws: usize,
    rng: &mut ChaCha8Rng,
) -> CliResult<Vec<f64>> {
    let base = &bundle.fits[0];
    let mats = locsparse::PenaltyMatrices::new(&bundle.spec()?);
    let pen = PenaltyConfig::new(base.lambda1, base.lambda2, base.xi, base.eta, bundle.intervals as f64)?;
    let offset = bundle.centering.as_ref().map_or(0.0, |c| c.response);
    let y_fit = y.add_scalar(-offset);
    let mut out = Vec::with_capacity(draws);
    for _ in 0..draws {
        let tau = loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        };
        let res = fit(design, &y_fit, &mats, &pen, &fit_options(cfg, bundle.method, tau))?;
        let row = rng.random_range(0..design.n());
        let yh: f64 = design
            .phi
            .row(row)
            .iter()
            .zip(&res.coeffs.omega)
            .map(|(a, b)| a * b)
            .sum();
        out.push(yh + offset);
    }
    Ok(out)
}

/// Writes `residual_density.csv` and `qq_points.csv` for a saved model and its data.
pub fn cmd_diagnose(cfg: &RunConfig) -> CliResult<()> {
    let bundle = ModelBundle::load(required(&cfg.model, "model")?)?;
    let response = cfg.response.clone().unwrap_or_else(|| bundle.response.clone());
    let data = load_data(required(&cfg.curves, "curves")?, required(&cfg.scalars, "scalars")?, &response, true)?;
    let y = data.y.clone().expect("response required");
    let design = bundle.design(&data)?;
    if cfg.qq_draws == 0 {
        return Err(CliError::Input("qq_draws must be positive".into()));
    }
    std::fs::create_dir_all(&cfg.output).map_err(|e| CliError::io(&cfg.output, e))?;

    let mut rows = Vec::new();
    for f in &bundle.fits {
        let r: Vec<f64> = (&y - bundle.predict(f, &design)?).iter().copied().collect();
        for (x, d) in kde(&r, cfg.kde_points) {
            rows.push(vec![bundle.method.label().to_string(), fmt(f.tau), fmt(x), fmt(d)]);
        }
    }
    io::write_rows(&cfg.output.join("residual_density.csv"), &header(&["method", "tau", "residual", "density"]), rows)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sim = qq_simulation(&bundle, &design, &y, cfg, cfg.qq_draws, &mut rng)?;
    sim.sort_by(f64::total_cmp);
    let mut obs: Vec<f64> = y.iter().copied().collect();
    obs.sort_by(f64::total_cmp);
    let m = sim.len();
    let rows = sim.iter().enumerate().map(|(i, &s)| {
        let p = (i as f64 + 0.5) / m as f64;
        vec![i.to_string(), fmt(p), fmt(s), fmt(quantile_sorted(&obs, p))]
    });
    io::write_rows(&cfg.output.join("qq_points.csv"), &header(&["index", "probability", "simulated", "observed"]), rows)
}
