//! Validation-set grid search over the roughness weight `η` and the
//! selection level `λ1` (with `λ2 = √(q+1) λ1`, `ξ` fixed).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::PenaltyMatrices;
use crate::design::DesignMatrices;
use crate::error::{check_dim, Error, Result};
use crate::penalty::{PenaltyConfig, PenaltyKind};
use crate::solver::{check_loss, fit, predict, FitOptions, FitResult, Loss};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid<T> {
    pub eta_grid: Vec<T>,
    pub lambda1_grid: Vec<T>,
    pub xi_fixed: T,
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space<T: Real>(lo: f64, hi: f64, count: usize) -> Vec<T> {
    match count {
        0 => Vec::new(),
        1 => vec![T::of(lo)],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| T::of((a + (b - a) * i as f64 / (count - 1) as f64).exp()))
                .collect()
        }
    }
}

impl<T: Real> Default for TuningGrid<T> {
    fn default() -> Self {
        let mut lambda1_grid = vec![T::zero()];
        lambda1_grid.extend(log_space::<T>(1e-4, 1.0, 10));
        Self {
            eta_grid: log_space(1e-8, 1e-2, 7),
            lambda1_grid,
            xi_fixed: T::of(crate::penalty::DEFAULT_XI),
        }
    }
}

impl<T: Real> TuningGrid<T> {
    pub fn new(eta_grid: Vec<T>, lambda1_grid: Vec<T>, xi_fixed: T) -> Result<Self> {
        let g = Self {
            eta_grid,
            lambda1_grid,
            xi_fixed,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta_grid.is_empty() || self.lambda1_grid.is_empty() {
            return Err(Error::InvalidArgument("tuning grids must be nonempty".into()));
        }
        let sorted = |v: &[T]| v.windows(2).all(|w| w[0] <= w[1]);
        if !sorted(&self.eta_grid) || !sorted(&self.lambda1_grid) {
            return Err(Error::InvalidArgument("tuning grids must be sorted ascending".into()));
        }
        if self.eta_grid.iter().chain(&self.lambda1_grid).any(|v| !(*v >= T::zero())) {
            return Err(Error::InvalidArgument("tuning values must be nonnegative".into()));
        }
        if !(self.xi_fixed > T::one()) {
            return Err(Error::InvalidArgument("xi must exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct TuningResult<T> {
    pub best_eta: T,
    pub best_lambda1: T,
    /// `score_table[(i, j)]` is the validation score at `eta_grid[i]`, `lambda1_grid[j]`;
    /// failed fits score `+∞`.
    pub score_table: DMatrix<T>,
    pub best_fit: FitResult<T>,
    /// Number of successful grid fits whose interval masks break the
    /// main-effect/interaction hierarchy.
    pub hierarchy_violations: usize,
    /// Number of successful grid fits.
    pub fits: usize,
}

impl<T: Real> TuningResult<T> {
    pub fn best_score(&self) -> T {
        self.score_table.iter().copied().fold(T::of(f64::INFINITY), |a, b| a.min(b))
    }
}

/// Mean check loss (quantile) or mean squared error (least squares) of
/// `y - ŷ`.
pub fn prediction_error<T: Real>(y: &[T], y_hat: &[T], tau: T, loss: Loss) -> Result<T> {
    check_dim("validation response", y.len(), y_hat.len())?;
    if y.is_empty() {
        return Err(Error::InvalidArgument("empty validation set".into()));
    }
    let total: T = y
        .iter()
        .zip(y_hat)
        .map(|(&a, &b)| {
            let r = a - b;
            match loss {
                Loss::Quantile => check_loss(r, tau),
                Loss::LeastSquares => r * r,
            }
        })
        .sum();
    Ok(total / T::of_usize(y.len()))
}

pub fn validation_score<T: Real>(
    fit: &FitResult<T>,
    valid_design: &DesignMatrices<T>,
    y_valid: &DVector<T>,
    tau: T,
    loss: Loss,
) -> Result<T> {
    let y_hat = predict(fit, valid_design)?;
    prediction_error(y_valid.as_slice(), y_hat.as_slice(), tau, loss)
}

/// Fits every `(η, λ1)` pair on the training data and keeps the pair with the
/// smallest validation score. Ties go to the smallest `λ1`, then the smallest
/// `η`, then the earliest grid position.
pub fn grid_search<T: Real>(
    train: (&DesignMatrices<T>, &DVector<T>),
    valid: (&DesignMatrices<T>, &DVector<T>),
    mats: &PenaltyMatrices<T>,
    grid: &TuningGrid<T>,
    opts: &FitOptions<T>,
    cfg_base: &PenaltyConfig<T>,
) -> Result<TuningResult<T>> {
    grid.validate()?;
    opts.validate()?;
    let q = train.0.layout.q;
    // Without a selection penalty λ1 has no effect; fit one column only.
    let lambdas: &[T] = if opts.penalty == PenaltyKind::SmoothOnly {
        &grid.lambda1_grid[..1]
    } else {
        &grid.lambda1_grid
    };
    let n_eta = grid.eta_grid.len();
    let n_lam = lambdas.len();
    let jobs: Vec<(usize, usize)> = (0..n_eta)
        .flat_map(|i| (0..n_lam).map(move |j| (i, j)))
        .collect();

    let outcomes: Vec<(T, Option<FitResult<T>>, bool)> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let mut cfg = cfg_base.with_tuning(lambdas[j], grid.eta_grid[i], q);
            cfg.xi = grid.xi_fixed;
            let scored = fit(train.0, train.1, mats, &cfg, opts).and_then(|f| {
                let s = validation_score(&f, valid.0, valid.1, opts.tau, opts.loss)?;
                Ok((s, f))
            });
            match scored {
                Ok((s, f)) => {
                    let broken = !f.hierarchy_violations().is_empty();
                    if s.is_finite() {
                        (s, Some(f), broken)
                    } else {
                        (T::of(f64::INFINITY), None, broken)
                    }
                }
                Err(_) => (T::of(f64::INFINITY), None, false),
            }
        })
        .collect();

    let mut score_table = DMatrix::from_element(n_eta, grid.lambda1_grid.len(), T::of(f64::INFINITY));
    let fits = outcomes.iter().filter(|o| o.1.is_some()).count();
    let hierarchy_violations = outcomes.iter().filter(|o| o.2).count();
    for (&(i, j), (s, _, _)) in jobs.iter().zip(&outcomes) {
        score_table[(i, j)] = *s;
    }
    if n_lam < grid.lambda1_grid.len() {
        for i in 0..n_eta {
            let s = score_table[(i, 0)];
            for j in 1..grid.lambda1_grid.len() {
                score_table[(i, j)] = s;
            }
        }
    }

    // Scan λ1 outermost so that, among equal scores, the smallest λ1 (then η) wins.
    let mut best: Option<(usize, usize)> = None;
    for j in 0..n_lam {
        for i in 0..n_eta {
            let s = score_table[(i, j)];
            let better = match best {
                None => s.is_finite(),
                Some((bi, bj)) => s < score_table[(bi, bj)],
            };
            if better {
                best = Some((i, j));
            }
        }
    }
    let (bi, bj) = best.ok_or_else(|| Error::Singular("every fit in the tuning grid failed".into()))?;
    let idx = bi * n_lam + bj;
    let best_fit = outcomes
        .into_iter()
        .nth(idx)
        .and_then(|(_, f, _)| f)
        .expect("finite score has a fit");
    Ok(TuningResult {
        best_eta: grid.eta_grid[bi],
        best_lambda1: lambdas[bj],
        score_table,
        best_fit,
        hierarchy_violations,
        fits,
    })
}
