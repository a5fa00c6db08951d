//! Penalized quantile (and least-squares) estimation by majorize-minimization
//! of the check loss combined with local quadratic approximation of the
//! selection penalty.
//!
//! Each iteration minimizes a quadratic surrogate exactly with one
//! Gauss–Newton step. For the quantile loss the surrogate majorizes the
//! perturbed check loss `ρ_τ(r) - (ϱ/2) ln(ϱ + |r|)`, so the perturbed
//! objective is monotone along the iterates; that value is recorded in
//! [`FitResult::surrogate_trace`].

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSpec, PenaltyMatrices};
use crate::design::{DesignLayout, DesignMatrices};
use crate::error::{check_dim, Error, Result};
use crate::penalty::{
    block_sq_norms, lqa_coefficients, penalty_value_for, roughness_value, LqaWeights, PenaltyConfig,
    PenaltyKind,
};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Loss {
    Quantile,
    LeastSquares,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdMode {
    /// Zero whole interval groups, then interaction blocks; never break the hierarchy.
    Groupwise,
    /// Zero every entry of `ω` below the cutoff.
    Elementwise,
}

/// The six estimators compared in the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Alt1,
    Alt2,
    Alt3,
    Alt4,
    Alt5,
    Proposed,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Alt1,
        Method::Alt2,
        Method::Alt3,
        Method::Alt4,
        Method::Alt5,
        Method::Proposed,
    ];

    pub fn loss(self) -> Loss {
        match self {
            Method::Alt1 | Method::Alt2 | Method::Alt3 => Loss::LeastSquares,
            _ => Loss::Quantile,
        }
    }

    pub fn penalty(self) -> PenaltyKind {
        match self {
            Method::Alt1 | Method::Alt4 => PenaltyKind::SmoothOnly,
            Method::Alt2 | Method::Alt5 => PenaltyKind::Mcp,
            Method::Alt3 | Method::Proposed => PenaltyKind::SparseGroup,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Alt1 => "Alt.1",
            Method::Alt2 => "Alt.2",
            Method::Alt3 => "Alt.3",
            Method::Alt4 => "Alt.4",
            Method::Alt5 => "Alt.5",
            Method::Proposed => "Proposed",
        }
    }

    /// Parses `alt1`..`alt5`, `proposed` (case-insensitive, `Alt.1` also accepted).
    pub fn parse(s: &str) -> Option<Method> {
        let key: String = s
            .chars()
            .filter(|c| *c != '.' && *c != '_' && *c != '-')
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "alt1" => Some(Method::Alt1),
            "alt2" => Some(Method::Alt2),
            "alt3" => Some(Method::Alt3),
            "alt4" => Some(Method::Alt4),
            "alt5" => Some(Method::Alt5),
            "proposed" => Some(Method::Proposed),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions<T> {
    pub tau: T,
    /// MM perturbation `ϱ`.
    pub rho_perturb: T,
    pub max_iter: usize,
    /// Stop when `‖ω^(m+1) - ω^(m)‖_2` falls below this.
    pub conv_tol: T,
    /// Final hard-threshold cutoff.
    pub zero_threshold: T,
    pub loss: Loss,
    pub penalty: PenaltyKind,
    pub threshold_mode: ThresholdMode,
    pub max_halvings: usize,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            tau: T::of(0.5),
            rho_perturb: T::of(1e-6),
            max_iter: 200,
            conv_tol: T::of(1e-4),
            zero_threshold: T::of(1e-3),
            loss: Loss::Quantile,
            penalty: PenaltyKind::SparseGroup,
            threshold_mode: ThresholdMode::Groupwise,
            max_halvings: 10,
        }
    }
}

impl<T: Real> FitOptions<T> {
    pub fn for_method(method: Method, tau: T) -> Self {
        Self {
            tau,
            loss: method.loss(),
            penalty: method.penalty(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > T::zero() && self.tau < T::one()) {
            return Err(Error::InvalidArgument(format!(
                "tau must lie in (0, 1), got {}",
                self.tau.as_f64()
            )));
        }
        if !(self.rho_perturb > T::zero()) {
            return Err(Error::InvalidArgument("rho_perturb must be positive".into()));
        }
        if !(self.zero_threshold >= T::zero()) {
            return Err(Error::InvalidArgument("zero_threshold must be nonnegative".into()));
        }
        if !(self.conv_tol > T::zero()) {
            return Err(Error::InvalidArgument("conv_tol must be positive".into()));
        }
        Ok(())
    }
}

/// `ω = (b_0, .., b_q, γ [, μ])` together with its layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients<T> {
    pub omega: Vec<T>,
    pub layout: DesignLayout,
}

impl<T: Real> Coefficients<T> {
    pub fn zeros(layout: DesignLayout) -> Self {
        Self {
            omega: vec![T::zero(); layout.d_n()],
            layout,
        }
    }

    /// Stacked `b`, length `q_n`.
    pub fn b(&self) -> &[T] {
        &self.omega[..self.layout.q_n()]
    }

    pub fn b_block(&self, k: usize) -> &[T] {
        &self.omega[self.layout.block(k)]
    }

    pub fn gamma(&self) -> &[T] {
        &self.omega[self.layout.gamma()]
    }

    pub fn intercept(&self) -> Option<T> {
        self.layout.intercept_index().map(|i| self.omega[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    /// Post-threshold estimate.
    pub coeffs: Coefficients<T>,
    /// Estimate at convergence, before thresholding.
    pub raw_omega: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Penalized objective (check loss or mean squares, selection penalty,
    /// roughness) at the initial value and after every iteration.
    pub objective_trace: Vec<T>,
    /// Value of the majorized (perturbed) objective at each iterate.
    pub surrogate_trace: Vec<T>,
    /// `interval_masks[k][l]` is true when `β̂_k` is identically zero on interval `l`.
    pub interval_masks: Vec<Vec<bool>>,
    /// Number of step halvings performed over the whole run.
    pub halvings: usize,
    pub tau: T,
    pub loss: Loss,
    pub penalty: PenaltyKind,
    pub config: PenaltyConfig<T>,
}

impl<T: Real> FitResult<T> {
    /// Intervals where some interaction is nonzero while the main effect is zero.
    pub fn hierarchy_violations(&self) -> Vec<usize> {
        hierarchy_violations(&self.interval_masks)
    }
}

/// Intervals where `mask[k][l]` is false for some `k >= 1` but `mask[0][l]` is true.
pub fn hierarchy_violations(masks: &[Vec<bool>]) -> Vec<usize> {
    let Some(main) = masks.first() else {
        return Vec::new();
    };
    (0..main.len())
        .filter(|&l| main[l] && masks[1..].iter().any(|m| !m[l]))
        .collect()
}

/// Check loss `ρ_τ(u) = u (τ - I(u < 0))`.
pub fn check_loss<T: Real>(u: T, tau: T) -> T {
    if u < T::zero() {
        u * (tau - T::one())
    } else {
        u * tau
    }
}

/// Perturbed check loss `ρ_τ(u) - (ϱ/2) ln(ϱ + |u|)` that the MM surrogate majorizes.
pub fn perturbed_check_loss<T: Real>(u: T, tau: T, rho: T) -> T {
    check_loss(u, tau) - rho * T::of(0.5) * (rho + u.abs()).ln()
}

/// Per-observation constant making the majorizer tangent to the perturbed loss at `r_prev`.
fn majorizer_constant<T: Real>(r_prev: T, rho: T) -> T {
    let s = r_prev.abs();
    let f = s * T::of(0.5) - rho * T::of(0.5) * (rho + s).ln();
    T::of(4.0) * f - s * s / (rho + s)
}

/// Quadratic majorizer of the mean check loss expanded at `r_prev`:
/// `(1/n) Σ ¼ (r_i²/(ϱ + |r_i'|) + (4τ - 2) r_i + c_i)`.
pub fn majorizer<T: Real>(r: &[T], r_prev: &[T], tau: T, rho: T) -> Result<T> {
    check_dim("majorizer residuals", r_prev.len(), r.len())?;
    if !(rho > T::zero()) {
        return Err(Error::InvalidArgument("rho must be positive".into()));
    }
    let n = T::of_usize(r.len().max(1));
    let lin = T::of(4.0) * tau - T::of(2.0);
    let quarter = T::of(0.25);
    let total = r
        .iter()
        .zip(r_prev)
        .map(|(&ri, &pi)| {
            quarter * (ri * ri / (rho + pi.abs()) + lin * ri + majorizer_constant(pi, rho))
        })
        .sum::<T>();
    Ok(total / n)
}

/// `Ṽ = diag(V, .., V, 0)`, `d_n x d_n`.
pub fn roughness_tilde<T: Real>(mats: &PenaltyMatrices<T>, layout: &DesignLayout) -> DMatrix<T> {
    let nb = layout.n_basis;
    let mut out = DMatrix::zeros(layout.d_n(), layout.d_n());
    for k in 0..=layout.q {
        out.view_mut((k * nb, k * nb), (nb, nb))
            .copy_from(&mats.roughness);
    }
    out
}

/// Solves the symmetric positive definite system `h x = rhs`, adding a small
/// ridge once if the factorization fails.
fn solve_spd<T: Real>(mut h: DMatrix<T>, rhs: &DVector<T>) -> Result<DVector<T>> {
    if let Some(ch) = Cholesky::new(h.clone()) {
        let x = ch.solve(rhs);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x);
        }
    }
    let d = h.nrows();
    let trace = h.trace().abs();
    let ridge = T::of(1e-10) * (if trace > T::zero() { trace } else { T::one() }) / T::of_usize(d.max(1));
    for i in 0..d {
        h[(i, i)] += ridge;
    }
    match Cholesky::new(h) {
        Some(ch) => {
            let x = ch.solve(rhs);
            if x.iter().all(|v| v.is_finite()) {
                Ok(x)
            } else {
                Err(Error::Singular("non-finite solution after ridge repair".into()))
            }
        }
        None => Err(Error::Singular(
            "system matrix not positive definite after ridge repair".into(),
        )),
    }
}

/// Gauss–Newton direction
/// `Δ = -(ΦᵀRΦ + 4nW̃ + 4nηṼ)⁻¹ (Φᵀv + 4nW̃ω + 4nηṼω)`
/// with `R = diag(1/(ϱ + |r_i'|))` and `v_i = 1 - 2τ - r_i/(ϱ + |r_i'|)`,
/// expanded at `omega` whose residuals are `r_prev`.
#[allow(clippy::too_many_arguments)]
pub fn newton_step<T: Real>(
    phi: &DMatrix<T>,
    omega: &DVector<T>,
    r_prev: &DVector<T>,
    weights: &LqaWeights<T>,
    v_tilde: &DMatrix<T>,
    tau: T,
    rho: T,
    eta: T,
) -> Result<DVector<T>> {
    newton_step_at(phi, omega, r_prev, r_prev, weights, v_tilde, tau, rho, eta)
}

/// As [`newton_step`], with current residuals `r` that may differ from the
/// expansion residuals `r_prev`.
#[allow(clippy::too_many_arguments)]
pub fn newton_step_at<T: Real>(
    phi: &DMatrix<T>,
    omega: &DVector<T>,
    r: &DVector<T>,
    r_prev: &DVector<T>,
    weights: &LqaWeights<T>,
    v_tilde: &DMatrix<T>,
    tau: T,
    rho: T,
    eta: T,
) -> Result<DVector<T>> {
    let n = phi.nrows();
    let d = phi.ncols();
    check_dim("newton step residuals", n, r_prev.len())?;
    check_dim("newton step residuals", n, r.len())?;
    check_dim("newton step coefficients", d, omega.len())?;
    check_dim("roughness matrix", d, v_tilde.nrows())?;
    let w_tilde = weights.padded(d);
    let four_n = T::of(4.0) * T::of_usize(n);
    let one_m_2tau = T::one() - T::of(2.0) * tau;
    let inv_a: Vec<T> = r_prev.iter().map(|&p| T::one() / (rho + p.abs())).collect();
    let mut phi_t_r = phi.transpose();
    for (i, &w) in inv_a.iter().enumerate() {
        phi_t_r.column_mut(i).scale_mut(w);
    }
    let pen = (&w_tilde + v_tilde * eta) * four_n;
    let h = &phi_t_r * phi + &pen;
    let v = DVector::from_iterator(n, (0..n).map(|i| one_m_2tau - r[i] * inv_a[i]));
    let g = phi.tr_mul(&v) + &pen * omega;
    Ok(-solve_spd(h, &g)?)
}

struct Problem<'a, T: Real> {
    phi: &'a DMatrix<T>,
    phi_t: DMatrix<T>,
    y: &'a DVector<T>,
    mats: &'a PenaltyMatrices<T>,
    cfg: &'a PenaltyConfig<T>,
    opts: &'a FitOptions<T>,
    layout: DesignLayout,
}

impl<T: Real> Problem<'_, T> {
    fn n(&self) -> usize {
        self.phi.nrows()
    }

    fn residuals(&self, omega: &DVector<T>) -> DVector<T> {
        self.y - self.phi * omega
    }

    fn penalty_terms(&self, omega: &DVector<T>) -> Result<T> {
        let b = &omega.as_slice()[..self.layout.q_n()];
        let sel = penalty_value_for(self.opts.penalty, b, self.cfg, self.mats, self.layout.q)?;
        let rough = if self.cfg.eta > T::zero() {
            self.cfg.eta * roughness_value(b, self.mats, self.layout.q)?
        } else {
            T::zero()
        };
        Ok(sel + rough)
    }

    /// Penalized objective with the true check loss (or mean squares).
    fn objective(&self, omega: &DVector<T>) -> Result<T> {
        let r = self.residuals(omega);
        let n = T::of_usize(self.n());
        let loss = match self.opts.loss {
            Loss::Quantile => r.iter().map(|&u| check_loss(u, self.opts.tau)).sum::<T>() / n,
            Loss::LeastSquares => r.iter().map(|&u| u * u).sum::<T>() / n,
        };
        Ok(loss + self.penalty_terms(omega)?)
    }

    /// Objective that the MM iteration decreases monotonically.
    fn merit(&self, omega: &DVector<T>) -> Result<T> {
        match self.opts.loss {
            Loss::LeastSquares => self.objective(omega),
            Loss::Quantile => {
                let r = self.residuals(omega);
                let n = T::of_usize(self.n());
                let loss = r
                    .iter()
                    .map(|&u| perturbed_check_loss(u, self.opts.tau, self.opts.rho_perturb))
                    .sum::<T>()
                    / n;
                Ok(loss + self.penalty_terms(omega)?)
            }
        }
    }

    /// Adds `scale (W̃ + ηṼ)` to `h` given LQA coefficients.
    fn add_penalty(&self, h: &mut DMatrix<T>, lqa: &DMatrix<T>, scale: T) {
        let nb = self.layout.n_basis;
        let half = T::of(0.5);
        for k in 0..=self.layout.q {
            let base = k * nb;
            if self.cfg.eta > T::zero() {
                let mut view = h.view_mut((base, base), (nb, nb));
                view += &self.mats.roughness * (scale * self.cfg.eta);
            }
            for (l, g) in self.mats.gram_local.iter().enumerate() {
                let c = lqa[(k, l)];
                if c == T::zero() {
                    continue;
                }
                let s = g.block.nrows();
                let mut view = h.view_mut((base + g.offset, base + g.offset), (s, s));
                view += &g.block * (scale * half * c);
            }
        }
    }

    fn initial(&self) -> Result<DVector<T>> {
        let n = T::of_usize(self.n());
        let mut a = &self.phi_t * self.phi;
        let zero = DMatrix::zeros(self.layout.q + 1, self.mats.m_intervals());
        self.add_penalty(&mut a, &zero, n);
        solve_spd(a, &(&self.phi_t * self.y))
    }

    fn step(&self, omega: &DVector<T>, gram: Option<&DMatrix<T>>) -> Result<DVector<T>> {
        let n = self.n();
        let b = &omega.as_slice()[..self.layout.q_n()];
        let lqa = lqa_coefficients(self.opts.penalty, b, self.cfg, self.mats, self.layout.q)?;
        let r = self.residuals(omega);
        let pen_scale;
        let (mut h, mut g) = match self.opts.loss {
            Loss::Quantile => {
                pen_scale = T::of(4.0) * T::of_usize(n);
                let rho = self.opts.rho_perturb;
                let one_m_2tau = T::one() - T::of(2.0) * self.opts.tau;
                let mut weighted = self.phi_t.clone();
                let mut v = DVector::zeros(n);
                for i in 0..n {
                    let inv = T::one() / (rho + r[i].abs());
                    weighted.column_mut(i).scale_mut(inv);
                    v[i] = one_m_2tau - r[i] * inv;
                }
                (&weighted * self.phi, &self.phi_t * v)
            }
            Loss::LeastSquares => {
                pen_scale = T::of_usize(n);
                let h = gram.expect("gram matrix precomputed for least squares").clone();
                (h, -(&self.phi_t * r))
            }
        };
        // g += scale (W̃ + ηṼ) ω, computed through the same blocks as h.
        let d = self.layout.d_n();
        let mut pen = DMatrix::zeros(d, d);
        self.add_penalty(&mut pen, &lqa, pen_scale);
        g += &pen * omega;
        h += pen;
        Ok(-solve_spd(h, &g)?)
    }
}

/// Fits the penalized model on `design` and response `y`.
pub fn fit<T: Real>(
    design: &DesignMatrices<T>,
    y: &DVector<T>,
    mats: &PenaltyMatrices<T>,
    cfg: &PenaltyConfig<T>,
    opts: &FitOptions<T>,
) -> Result<FitResult<T>> {
    opts.validate()?;
    cfg.validate()?;
    let layout = design.layout;
    check_dim("response length", design.n(), y.len())?;
    check_dim("basis size", layout.n_basis, mats.n_basis())?;

    let problem = Problem {
        phi: &design.phi,
        phi_t: design.phi.transpose(),
        y,
        mats,
        cfg,
        opts,
        layout,
    };
    let gram = match opts.loss {
        Loss::LeastSquares => Some(&problem.phi_t * &design.phi),
        Loss::Quantile => None,
    };

    let mut omega = problem.initial()?;
    let mut merit = problem.merit(&omega)?;
    let mut objective_trace = vec![problem.objective(&omega)?];
    let mut surrogate_trace = vec![merit];
    let mut converged = false;
    let mut iterations = 0;
    let mut halvings = 0;
    let slack = T::of(1e-12);

    while iterations < opts.max_iter {
        let delta = problem.step(&omega, gram.as_ref())?;
        let mut scale = T::one();
        let mut candidate = &omega + &delta;
        let mut cand_merit = problem.merit(&candidate)?;
        let mut tries = 0;
        while !(cand_merit <= merit + slack * (T::one() + merit.abs())) && tries < opts.max_halvings {
            scale *= T::of(0.5);
            candidate = &omega + &delta * scale;
            cand_merit = problem.merit(&candidate)?;
            tries += 1;
        }
        halvings += tries;
        let moved = (&delta * scale).norm();
        if !(cand_merit <= merit + slack * (T::one() + merit.abs())) {
            // No descent along Δ at any tried step length: stay put.
            converged = moved < opts.conv_tol;
            break;
        }
        omega = candidate;
        merit = cand_merit;
        iterations += 1;
        objective_trace.push(problem.objective(&omega)?);
        surrogate_trace.push(merit);
        if moved < opts.conv_tol {
            converged = true;
            break;
        }
    }

    let raw_omega = omega.as_slice().to_vec();
    let mut coeffs = Coefficients {
        omega: raw_omega.clone(),
        layout,
    };
    threshold(&mut coeffs, mats, opts.penalty, opts.threshold_mode, opts.zero_threshold)?;
    let interval_masks = interval_masks(&coeffs, mats)?;

    Ok(FitResult {
        coeffs,
        raw_omega,
        iterations,
        converged,
        objective_trace,
        surrogate_trace,
        interval_masks,
        halvings,
        tau: opts.tau,
        loss: opts.loss,
        penalty: opts.penalty,
        config: *cfg,
    })
}

/// Hard-thresholds the estimate in place.
///
/// Groupwise mode zeroes the band of an interval for every block when the
/// full group norm there is below `cutoff`, then zeroes interaction (or, without
/// a group penalty, any) blocks whose own norm is below `cutoff`. Main-effect
/// coefficients are only ever zeroed together with all interactions at the
/// same index, so the hierarchy survives thresholding.
pub fn threshold<T: Real>(
    coeffs: &mut Coefficients<T>,
    mats: &PenaltyMatrices<T>,
    kind: PenaltyKind,
    mode: ThresholdMode,
    cutoff: T,
) -> Result<()> {
    let layout = coeffs.layout;
    match mode {
        ThresholdMode::Elementwise => {
            for v in coeffs.omega.iter_mut() {
                if v.abs() < cutoff {
                    *v = T::zero();
                }
            }
        }
        ThresholdMode::Groupwise => {
            let q = layout.q;
            let nb = layout.n_basis;
            let sq = block_sq_norms(coeffs.b(), mats, q)?;
            let cut2 = cutoff * cutoff;
            let mut zero = vec![vec![false; nb]; q + 1];
            let first_individual = match kind {
                PenaltyKind::SparseGroup => {
                    for (l, g) in mats.gram_local.iter().enumerate() {
                        if sq.column(l).sum() < cut2 {
                            let s = g.block.nrows();
                            for row in zero.iter_mut() {
                                row[g.offset..g.offset + s].iter_mut().for_each(|z| *z = true);
                            }
                        }
                    }
                    1
                }
                PenaltyKind::Mcp | PenaltyKind::SmoothOnly => 0,
            };
            for (k, row) in zero.iter_mut().enumerate().skip(first_individual) {
                for (l, g) in mats.gram_local.iter().enumerate() {
                    if sq[(k, l)] < cut2 {
                        let s = g.block.nrows();
                        row[g.offset..g.offset + s].iter_mut().for_each(|z| *z = true);
                    }
                }
            }
            for (k, row) in zero.iter().enumerate() {
                for (j, &z) in row.iter().enumerate() {
                    if z {
                        coeffs.omega[k * nb + j] = T::zero();
                    }
                }
            }
        }
    }
    Ok(())
}

/// `mask[k][l]` is true iff `‖b_k‖_{W_l} = 0`, i.e. every coefficient in the band is zero.
pub fn interval_masks<T: Real>(coeffs: &Coefficients<T>, mats: &PenaltyMatrices<T>) -> Result<Vec<Vec<bool>>> {
    let layout = coeffs.layout;
    let nb = layout.n_basis;
    check_dim("basis size", nb, mats.n_basis())?;
    Ok((0..=layout.q)
        .map(|k| {
            let block = coeffs.b_block(k);
            mats.gram_local
                .iter()
                .map(|g| {
                    let s = g.block.nrows();
                    block[g.offset..g.offset + s].iter().all(|v| *v == T::zero())
                })
                .collect()
        })
        .collect())
}

/// `β̂_k(t) = B(t)ᵀ b̂_k` on `grid`, as a `(q+1) x |grid|` matrix.
pub fn reconstruct<T: Real>(result: &FitResult<T>, spec: &BasisSpec<T>, grid: &[T]) -> Result<DMatrix<T>> {
    reconstruct_coefficients(&result.coeffs, spec, grid)
}

pub fn reconstruct_coefficients<T: Real>(
    coeffs: &Coefficients<T>,
    spec: &BasisSpec<T>,
    grid: &[T],
) -> Result<DMatrix<T>> {
    let layout = coeffs.layout;
    check_dim("basis size", spec.n_basis(), layout.n_basis)?;
    let mut out = DMatrix::zeros(layout.q + 1, grid.len());
    for (g, &t) in grid.iter().enumerate() {
        let (first, vals) = spec.eval_local(t, 0)?;
        for k in 0..=layout.q {
            let b = coeffs.b_block(k);
            let mut acc = T::zero();
            for (j, &v) in vals.iter().enumerate() {
                let c = b[first + j];
                if c != T::zero() {
                    acc += v * c;
                }
            }
            out[(k, g)] = acc;
        }
    }
    Ok(out)
}

/// Conditional-quantile (or mean) predictions `ŷ_i = φ_iᵀ ω̂`.
pub fn predict<T: Real>(result: &FitResult<T>, new_design: &DesignMatrices<T>) -> Result<DVector<T>> {
    predict_coefficients(&result.coeffs, new_design)
}

pub fn predict_coefficients<T: Real>(coeffs: &Coefficients<T>, design: &DesignMatrices<T>) -> Result<DVector<T>> {
    if coeffs.layout != design.layout {
        return Err(Error::InvalidArgument(format!(
            "design layout {:?} does not match fitted layout {:?}",
            design.layout, coeffs.layout
        )));
    }
    Ok(&design.phi * DVector::from_column_slice(&coeffs.omega))
}
