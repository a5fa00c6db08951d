//! Estimation and selection accuracy of a fitted model against the truth.

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{check_dim, Result};
use crate::simbench::scenario::ScenarioSpec;
use crate::solver::Coefficients;
use crate::Real;

/// Points of the uniform grid used for the selection rates.
pub const RATE_GRID_POINTS: usize = 2001;
/// Trapezoid points per unit length for the ISE integrals.
pub const ISE_DENSITY: f64 = 4000.0;

/// Per-fit metrics; per-k entries are `None` when the region they refer to is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Mean squared error of `β̂_k` over the null region of `β*_k`.
    pub ise0: Vec<Option<f64>>,
    /// Mean squared error of `β̂_k` over the nonnull region of `β*_k`.
    pub ise1: Vec<Option<f64>>,
    pub rmse_gamma: f64,
    pub ftpr: Vec<Option<f64>>,
    pub ftnr: Vec<Option<f64>>,
}

impl MetricsReport {
    /// `ISE_0 + ISE_1` summed over `k`, skipping empty regions.
    pub fn total_ise(&self) -> f64 {
        self.ise0.iter().chain(&self.ise1).flatten().sum()
    }
}

/// `∫_a^b f` by the composite trapezoid rule with about `ISE_DENSITY` points per unit.
fn trapezoid<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let cells = (((b - a) * ISE_DENSITY).ceil() as usize).max(2);
    let h = (b - a) / cells as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for i in 1..cells {
        acc += f(a + h * i as f64);
    }
    acc * h
}

/// Metrics for an arbitrary estimate `beta_hat(k, t)`.
pub fn metrics_from_fn<F: Fn(usize, f64) -> f64>(
    beta_hat: F,
    gamma_hat: &[f64],
    scenario: &ScenarioSpec,
) -> Result<MetricsReport> {
    check_dim("gamma estimate", scenario.gamma_true.len(), gamma_hat.len())?;
    let q = scenario.q;
    let end = scenario.domain_end();
    let mut report = MetricsReport {
        ise0: Vec::with_capacity(q + 1),
        ise1: Vec::with_capacity(q + 1),
        rmse_gamma: gamma_hat
            .iter()
            .zip(&scenario.gamma_true)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt(),
        ftpr: Vec::with_capacity(q + 1),
        ftnr: Vec::with_capacity(q + 1),
    };
    for k in 0..=q {
        let null = scenario.null_regions(k);
        let l0: f64 = null.iter().map(|(a, b)| b - a).sum();
        report.ise0.push((l0 > 0.0).then(|| {
            null.iter()
                .map(|&(a, b)| trapezoid(a, b, |t| beta_hat(k, t).powi(2)))
                .sum::<f64>()
                / l0
        }));
        let pieces = &scenario.pieces[k];
        let l1: f64 = pieces.iter().map(|p| p.len()).sum();
        report.ise1.push((l1 > 0.0).then(|| {
            pieces
                .iter()
                .map(|p| trapezoid(p.lo, p.hi, |t| (beta_hat(k, t) - (p.f)(t)).powi(2)))
                .sum::<f64>()
                / l1
        }));

        let (mut pos, mut tp, mut neg, mut tn) = (0usize, 0usize, 0usize, 0usize);
        for i in 0..RATE_GRID_POINTS {
            let t = end * i as f64 / (RATE_GRID_POINTS - 1) as f64;
            let nonzero = beta_hat(k, t) != 0.0;
            if scenario.is_null(k, t) {
                neg += 1;
                tn += usize::from(!nonzero);
            } else {
                pos += 1;
                tp += usize::from(nonzero);
            }
        }
        report.ftpr.push((pos > 0).then(|| tp as f64 / pos as f64));
        report.ftnr.push((neg > 0).then(|| tn as f64 / neg as f64));
    }
    Ok(report)
}

/// Metrics of fitted coefficients expanded in `spec`.
pub fn metrics<T: Real>(
    coeffs: &Coefficients<T>,
    scenario: &ScenarioSpec,
    spec: &BasisSpec<T>,
) -> Result<MetricsReport> {
    check_dim("estimation basis", spec.n_basis(), coeffs.layout.n_basis)?;
    check_dim("scalar covariates", scenario.q, coeffs.layout.q)?;
    let blocks: Vec<Vec<f64>> = (0..=scenario.q)
        .map(|k| coeffs.b_block(k).iter().map(|v| v.as_f64()).collect())
        .collect();
    let beta_hat = |k: usize, t: f64| -> f64 {
        let tt = T::of(t).min(spec.domain_end());
        let (first, vals) = spec.eval_local(tt, 0).expect("grid inside the domain");
        let b = &blocks[k];
        let mut acc = 0.0;
        for (j, v) in vals.iter().enumerate() {
            let c = b[first + j];
            if c != 0.0 {
                acc += v.as_f64() * c;
            }
        }
        acc
    };
    let gamma: Vec<f64> = coeffs.gamma().iter().map(|v| v.as_f64()).collect();
    metrics_from_fn(beta_hat, &gamma, scenario)
}
