//! Random functional covariates, scalar covariates and responses.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};

use crate::basis::BasisSpec;
use crate::design::{Curves, Dataset};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::simbench::scenario::ScenarioSpec;
use crate::Real;

/// Degree of the spline basis the covariate curves are drawn in.
pub const CURVE_DEGREE: usize = 4;
/// Intervals of the covariate basis (71 breakpoints).
pub const CURVE_INTERVALS: usize = 70;
pub const CURVE_COEF_SD: f64 = 5.0;

/// Error distribution of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ErrorCase {
    /// Homoscedastic normal noise with `Var(signal) / σ² = snr`.
    Case1 { snr: f64 },
    /// Student t with 3 degrees of freedom.
    Case2,
    /// `ε = 1.5 |z_1 ∫X β*_1| (N(0,1) - Φ⁻¹(τ))`, whose `τ`-quantile is zero.
    Case3 { tau: f64 },
    /// No noise.
    Noiseless,
}

impl ErrorCase {
    pub fn case1() -> Self {
        Self::Case1 { snr: 4.0 }
    }

    /// Parses `1`, `2`, `3` (Case 3 needs `tau`).
    pub fn from_id(id: u8, tau: f64) -> Result<Self> {
        match id {
            1 => Ok(Self::case1()),
            2 => Ok(Self::Case2),
            3 => {
                if tau > 0.0 && tau < 1.0 {
                    Ok(Self::Case3 { tau })
                } else {
                    Err(Error::InvalidArgument(format!("case 3 needs tau in (0, 1), got {tau}")))
                }
            }
            0 => Ok(Self::Noiseless),
            _ => Err(Error::InvalidArgument(format!("unknown error case {id}"))),
        }
    }

    pub fn id(&self) -> u8 {
        match self {
            Self::Case1 { .. } => 1,
            Self::Case2 => 2,
            Self::Case3 { .. } => 3,
            Self::Noiseless => 0,
        }
    }
}

pub fn curve_basis<T: Real>() -> BasisSpec<T> {
    BasisSpec::new(CURVE_DEGREE, CURVE_INTERVALS, T::one()).expect("valid generator basis")
}

/// `n x 74` matrix of i.i.d. `N(0, 5²)` curve coefficients.
pub fn gen_curves<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let k = CURVE_INTERVALS + CURVE_DEGREE;
    let dist = Normal::new(0.0, CURVE_COEF_SD).expect("valid normal");
    // Row-major draw order so a prefix of rows does not depend on n.
    let mut out = DMatrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            out[(i, j)] = dist.sample(rng);
        }
    }
    out
}

pub fn gen_curves_seeded(n: usize, seed: u64) -> DMatrix<f64> {
    gen_curves(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `G[j, k] = ∫ B_j(t) β*_k(t) dt` for the covariate basis.
///
/// Integrated piecewise on the union of spline breakpoints and scenario
/// piece endpoints, each cell split four times with 12 Gauss points.
pub fn beta_projections(scenario: &ScenarioSpec, basis: &BasisSpec<f64>) -> Result<DMatrix<f64>> {
    const SPLIT: usize = 4;
    const POINTS: usize = 12;
    let mut cuts: Vec<f64> = basis.breakpoints().to_vec();
    cuts.extend(scenario.breakpoints());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut edges = Vec::with_capacity(cuts.len() * SPLIT);
    for w in cuts.windows(2) {
        for s in 0..SPLIT {
            edges.push(w[0] + (w[1] - w[0]) * s as f64 / SPLIT as f64);
        }
    }
    edges.push(*cuts.last().expect("nonempty breakpoints"));
    let rule = QuadratureRule::on_partition(&edges, POINTS);
    let q = scenario.q;
    let mut g = DMatrix::zeros(basis.n_basis(), q + 1);
    for (nodes, weights) in rule.nodes.iter().zip(&rule.weights) {
        for (&t, &w) in nodes.iter().zip(weights) {
            let (first, vals) = basis.eval_local(t, 0)?;
            for k in 0..=q {
                let b = scenario.beta(k, t);
                if b == 0.0 {
                    continue;
                }
                for (j, v) in vals.iter().enumerate() {
                    g[(first + j, k)] += w * v * b;
                }
            }
        }
    }
    Ok(g)
}

/// Response draw for a fixed set of curves.
#[derive(Debug, Clone)]
pub struct SimResponse {
    /// `n x q` scalar covariates.
    pub z: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Noise-free part of `y`.
    pub signal: DVector<f64>,
    pub eps: DVector<f64>,
    /// `n x (q+1)` matrix of `∫ X_i β*_k`.
    pub integrals: DMatrix<f64>,
}

/// Draws `Z` and `ε` and assembles `y` from precomputed projections.
pub fn gen_response<R: Rng + ?Sized>(
    curves: &DMatrix<f64>,
    projections: &DMatrix<f64>,
    scenario: &ScenarioSpec,
    error: ErrorCase,
    rng: &mut R,
) -> Result<SimResponse> {
    let n = curves.nrows();
    let q = scenario.q;
    if curves.ncols() != projections.nrows() {
        return Err(Error::DimensionMismatch {
            context: "curve coefficients vs projections",
            expected: projections.nrows(),
            found: curves.ncols(),
        });
    }
    let integrals: DMatrix<f64> = curves * projections;
    let mut z: DMatrix<f64> = DMatrix::zeros(n, q);
    for i in 0..n {
        for k in 0..q {
            z[(i, k)] = rng.sample(StandardNormal);
        }
    }
    let signal = DVector::from_fn(n, |i, _| {
        let mut s = integrals[(i, 0)];
        for k in 0..q {
            s += z[(i, k)] * (integrals[(i, k + 1)] + scenario.gamma_true[k]);
        }
        s
    });
    let eps = match error {
        ErrorCase::Case1 { snr } => {
            let sigma = population_sd(signal.as_slice()) / snr.sqrt();
            DVector::from_fn(n, |_, _| sigma * rng.sample::<f64, _>(StandardNormal))
        }
        ErrorCase::Case2 => {
            let t3 = StudentT::new(3.0).expect("valid t distribution");
            DVector::from_fn(n, |_, _| t3.sample(rng))
        }
        ErrorCase::Case3 { tau } => {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(Error::InvalidArgument(format!("case 3 needs tau in (0, 1), got {tau}")));
            }
            let shift = NormalDist::standard().inverse_cdf(tau);
            DVector::from_fn(n, |i, _| {
                let scale = 1.5 * (z[(i, 0)] * integrals[(i, 1)]).abs();
                scale * (rng.sample::<f64, _>(StandardNormal) - shift)
            })
        }
        ErrorCase::Noiseless => DVector::zeros(n),
    };
    let y = &signal + &eps;
    Ok(SimResponse {
        z,
        y,
        signal,
        eps,
        integrals,
    })
}

fn population_sd(v: &[f64]) -> f64 {
    let n = v.len().max(1) as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Simulated sample with its curves stored as covariate-basis coefficients.
#[derive(Debug, Clone)]
pub struct SimData {
    pub coefs: DMatrix<f64>,
    pub response: SimResponse,
}

impl SimData {
    pub fn dataset<T: Real>(&self) -> Result<Dataset<T>> {
        let curves = Curves::Coefficients {
            basis: curve_basis::<T>(),
            coefs: self.coefs.map(T::of),
        };
        Dataset::new(curves, self.response.z.map(T::of), self.response.y.map(T::of))
    }
}

/// Draws curves, then `Z` and `ε`, from `rng`.
pub fn gen_sample<R: Rng + ?Sized>(
    n: usize,
    scenario: &ScenarioSpec,
    projections: &DMatrix<f64>,
    error: ErrorCase,
    rng: &mut R,
) -> Result<SimData> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let coefs = gen_curves(n, rng);
    let response = gen_response(&coefs, projections, scenario, error, rng)?;
    Ok(SimData { coefs, response })
}
