//! MCP, the per-interval sparse-group penalty and its local quadratic approximation.
//!
//! Coefficients are stacked as `b = (b_0, b_1, .., b_q)`, each block of
//! length `M + d`. The group term acts on all blocks of an interval at
//! once; the individual term only on the interaction blocks `k >= 1`, so a
//! main effect can never be zero where an interaction survives.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::PenaltyMatrices;
use crate::error::{check_dim, Error, Result};
use crate::quadrature::QuadratureRule;
use crate::Real;

pub const DEFAULT_XI: f64 = 6.0;
pub const DEFAULT_NORM_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig<T> {
    pub lambda1: T,
    pub lambda2: T,
    /// MCP concavity parameter.
    pub xi: T,
    /// Roughness weight.
    pub eta: T,
    /// Penalty modifier; fixed to the number of knot intervals.
    pub kappa: T,
    /// Lower bound on group norms in LQA denominators.
    pub norm_floor: T,
}

impl<T: Real> PenaltyConfig<T> {
    pub fn new(lambda1: T, lambda2: T, xi: T, eta: T, kappa: T) -> Result<Self> {
        let cfg = Self {
            lambda1,
            lambda2,
            xi,
            eta,
            kappa,
            norm_floor: T::of(DEFAULT_NORM_FLOOR),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `λ2 = sqrt(q + 1) λ1`, `ξ = 6`, `κ = M`.
    pub fn from_rule(lambda1: T, eta: T, q: usize, m_intervals: usize) -> Result<Self> {
        Self::new(
            lambda1,
            T::of_usize(q + 1).sqrt() * lambda1,
            T::of(DEFAULT_XI),
            eta,
            T::of_usize(m_intervals),
        )
    }

    /// Same configuration with a new `(η, λ1)` pair under the `λ2 = sqrt(q+1) λ1` rule.
    pub fn with_tuning(&self, lambda1: T, eta: T, q: usize) -> Self {
        Self {
            lambda1,
            lambda2: T::of_usize(q + 1).sqrt() * lambda1,
            eta,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: T| {
            Err(Error::InvalidArgument(format!(
                "penalty {what} = {} is invalid",
                v.as_f64()
            )))
        };
        if !(self.lambda1 >= T::zero()) {
            return bad("lambda1", self.lambda1);
        }
        if !(self.lambda2 >= T::zero()) {
            return bad("lambda2", self.lambda2);
        }
        if !(self.xi > T::one()) {
            return bad("xi", self.xi);
        }
        if !(self.eta >= T::zero()) {
            return bad("eta", self.eta);
        }
        if !(self.norm_floor > T::zero()) {
            return bad("norm_floor", self.norm_floor);
        }
        Ok(())
    }
}

/// Which sparsity penalty accompanies the roughness term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PenaltyKind {
    /// Roughness only, no selection.
    SmoothOnly,
    /// Individual MCP on every block `k = 0..=q`, no group term.
    Mcp,
    /// Group MCP per interval plus individual MCP on interactions.
    SparseGroup,
}

/// MCP `p_λ(t) = λ ∫_0^{|t|} (1 - x/(λξ))_+ dx`.
pub fn mcp<T: Real>(t: T, lambda: T, xi: T) -> T {
    let a = t.abs();
    if lambda <= T::zero() {
        return T::zero();
    }
    let knee = lambda * xi;
    if a >= knee {
        lambda * knee * T::of(0.5)
    } else {
        lambda * a - a * a / (T::of(2.0) * xi)
    }
}

/// `p'_λ(t) = λ (1 - |t|/(λξ))_+`.
pub fn mcp_deriv<T: Real>(t: T, lambda: T, xi: T) -> T {
    if lambda <= T::zero() {
        return T::zero();
    }
    let r = T::one() - t.abs() / (lambda * xi);
    if r > T::zero() {
        lambda * r
    } else {
        T::zero()
    }
}

/// `p'(s) / max(s, floor)`, zero once the penalty is saturated.
fn lqa_ratio<T: Real>(s: T, lambda: T, xi: T, floor: T) -> T {
    let d = mcp_deriv(s, lambda, xi);
    if d == T::zero() {
        T::zero()
    } else {
        d / s.max(floor)
    }
}

/// `(bᵀ W b)^{1/2}`.
pub fn group_norm<T: Real>(b_block: &[T], w_l: &DMatrix<T>) -> Result<T> {
    check_dim("group norm rows", w_l.nrows(), b_block.len())?;
    check_dim("group norm columns", w_l.ncols(), b_block.len())?;
    let mut acc = T::zero();
    for i in 0..b_block.len() {
        let mut row = T::zero();
        for j in 0..b_block.len() {
            row += w_l[(i, j)] * b_block[j];
        }
        acc += b_block[i] * row;
    }
    Ok(acc.max(T::zero()).sqrt())
}

/// Squared norms `‖b_k‖²_{W_l}` laid out as a `(q+1) x M` matrix.
pub fn block_sq_norms<T: Real>(b: &[T], mats: &PenaltyMatrices<T>, q: usize) -> Result<DMatrix<T>> {
    let nb = mats.n_basis();
    check_dim("stacked coefficients", (q + 1) * nb, b.len())?;
    let m = mats.m_intervals();
    let mut out = DMatrix::zeros(q + 1, m);
    for k in 0..=q {
        let block = &b[k * nb..(k + 1) * nb];
        for (l, g) in mats.gram_local.iter().enumerate() {
            out[(k, l)] = g.quad_form(block).max(T::zero());
        }
    }
    Ok(out)
}

/// Sparse-group penalty `Σ_{k≥1} Σ_l p_λ1(‖b_k‖_{W_l}) + Σ_l p_λ2(‖b‖_{W_l})`.
pub fn penalty_value<T: Real>(
    b: &[T],
    cfg: &PenaltyConfig<T>,
    mats: &PenaltyMatrices<T>,
    q: usize,
) -> Result<T> {
    penalty_value_for(PenaltyKind::SparseGroup, b, cfg, mats, q)
}

/// Selection penalty of the given kind (the roughness term is not included).
pub fn penalty_value_for<T: Real>(
    kind: PenaltyKind,
    b: &[T],
    cfg: &PenaltyConfig<T>,
    mats: &PenaltyMatrices<T>,
    q: usize,
) -> Result<T> {
    let sq = block_sq_norms(b, mats, q)?;
    let mut total = T::zero();
    match kind {
        PenaltyKind::SmoothOnly => {}
        PenaltyKind::Mcp => {
            for v in sq.iter() {
                total += mcp(v.sqrt(), cfg.lambda1, cfg.xi);
            }
        }
        PenaltyKind::SparseGroup => {
            for l in 0..sq.ncols() {
                let col = sq.column(l);
                for k in 1..=q {
                    total += mcp(col[k].sqrt(), cfg.lambda1, cfg.xi);
                }
                total += mcp(col.sum().sqrt(), cfg.lambda2, cfg.xi);
            }
        }
    }
    Ok(total)
}

/// Roughness `Σ_k b_kᵀ V b_k`.
pub fn roughness_value<T: Real>(b: &[T], mats: &PenaltyMatrices<T>, q: usize) -> Result<T> {
    let nb = mats.n_basis();
    check_dim("stacked coefficients", (q + 1) * nb, b.len())?;
    let v = &mats.roughness;
    let mut total = T::zero();
    for k in 0..=q {
        let blk = &b[k * nb..(k + 1) * nb];
        for i in 0..nb {
            let mut row = T::zero();
            for j in 0..nb {
                row += v[(i, j)] * blk[j];
            }
            total += blk[i] * row;
        }
    }
    Ok(total)
}

/// Per-interval LQA coefficients `c_{k,l}` with `W̆_k = ½ Σ_l c_{k,l} W_l`.
pub fn lqa_coefficients<T: Real>(
    kind: PenaltyKind,
    b: &[T],
    cfg: &PenaltyConfig<T>,
    mats: &PenaltyMatrices<T>,
    q: usize,
) -> Result<DMatrix<T>> {
    let sq = block_sq_norms(b, mats, q)?;
    let m = sq.ncols();
    let mut c = DMatrix::zeros(q + 1, m);
    let floor = cfg.norm_floor;
    match kind {
        PenaltyKind::SmoothOnly => {}
        PenaltyKind::Mcp => {
            for k in 0..=q {
                for l in 0..m {
                    c[(k, l)] = lqa_ratio(sq[(k, l)].sqrt(), cfg.lambda1, cfg.xi, floor);
                }
            }
        }
        PenaltyKind::SparseGroup => {
            for l in 0..m {
                let group = lqa_ratio(sq.column(l).sum().sqrt(), cfg.lambda2, cfg.xi, floor);
                c[(0, l)] = group;
                for k in 1..=q {
                    c[(k, l)] = group + lqa_ratio(sq[(k, l)].sqrt(), cfg.lambda1, cfg.xi, floor);
                }
            }
        }
    }
    Ok(c)
}

/// LQA blocks `W̆_0 .. W̆_q`, each `(M+d) x (M+d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqaWeights<T> {
    pub blocks: Vec<DMatrix<T>>,
}

impl<T: Real> LqaWeights<T> {
    pub fn from_coefficients(coef: &DMatrix<T>, mats: &PenaltyMatrices<T>) -> Self {
        let nb = mats.n_basis();
        let half = T::of(0.5);
        let blocks = (0..coef.nrows())
            .map(|k| {
                let mut w = DMatrix::zeros(nb, nb);
                for (l, g) in mats.gram_local.iter().enumerate() {
                    let c = coef[(k, l)] * half;
                    if c == T::zero() {
                        continue;
                    }
                    let s = g.block.nrows();
                    let mut view = w.view_mut((g.offset, g.offset), (s, s));
                    view += &g.block * c;
                }
                w
            })
            .collect();
        Self { blocks }
    }

    /// Block-diagonal `W̆`, `q_n x q_n`.
    pub fn assembled(&self) -> DMatrix<T> {
        self.padded(self.blocks.iter().map(|b| b.nrows()).sum())
    }

    /// `W̃ = diag(W̆, 0)`, `d_n x d_n`, zero on scalar and intercept rows/columns.
    pub fn padded(&self, d_n: usize) -> DMatrix<T> {
        let mut out = DMatrix::zeros(d_n, d_n);
        let mut off = 0;
        for b in &self.blocks {
            let s = b.nrows();
            out.view_mut((off, off), (s, s)).copy_from(b);
            off += s;
        }
        out
    }
}

/// LQA weights of the sparse-group penalty at `b_current`.
pub fn lqa_weights<T: Real>(
    b_current: &[T],
    cfg: &PenaltyConfig<T>,
    mats: &PenaltyMatrices<T>,
    q: usize,
) -> Result<LqaWeights<T>> {
    lqa_weights_for(PenaltyKind::SparseGroup, b_current, cfg, mats, q)
}

pub fn lqa_weights_for<T: Real>(
    kind: PenaltyKind,
    b_current: &[T],
    cfg: &PenaltyConfig<T>,
    mats: &PenaltyMatrices<T>,
    q: usize,
) -> Result<LqaWeights<T>> {
    let c = lqa_coefficients(kind, b_current, cfg, mats, q)?;
    Ok(LqaWeights::from_coefficients(&c, mats))
}

/// Gap between the continuous sparse-group penalty of smooth functions and
/// its per-interval discretization at `m_intervals` intervals.
///
/// `beta(k, t)` evaluates the `q + 1` coefficient functions on `[0, domain_end]`.
/// The continuous side is `Σ_{k≥1} (1/T)∫ p_λ1(|β_k|) + (1/T)∫ p_λ2(‖β‖_2)`; the
/// discrete side replaces each integral by the mean over intervals of the
/// penalty at the interval RMS norm.
pub fn lemma1_gap<T: Real, F: Fn(usize, T) -> T>(
    beta: F,
    q: usize,
    cfg: &PenaltyConfig<T>,
    m_intervals: usize,
    domain_end: T,
) -> Result<T> {
    if m_intervals == 0 {
        return Err(Error::InvalidArgument("need at least one interval".into()));
    }
    const FINE_INTERVALS: usize = 8192;
    const FINE_POINTS: usize = 8;
    const COARSE_POINTS: usize = 64;

    let edges = |m: usize| -> Vec<T> {
        (0..=m)
            .map(|i| {
                if i == m {
                    domain_end
                } else {
                    domain_end * T::of_usize(i) / T::of_usize(m)
                }
            })
            .collect()
    };

    let fine = QuadratureRule::on_partition(&edges(FINE_INTERVALS), FINE_POINTS);
    let continuous = fine.integrate(|t| {
        let mut sq = T::zero();
        let mut acc = T::zero();
        for k in 0..=q {
            let v = beta(k, t);
            sq += v * v;
            if k >= 1 {
                acc += mcp(v, cfg.lambda1, cfg.xi);
            }
        }
        acc + mcp(sq.sqrt(), cfg.lambda2, cfg.xi)
    }) / domain_end;

    let coarse = QuadratureRule::on_partition(&edges(m_intervals), COARSE_POINTS);
    let mf = T::of_usize(m_intervals);
    let scale = mf / domain_end;
    let mut discrete = T::zero();
    for l in 0..m_intervals {
        let mut total_sq = T::zero();
        for k in 0..=q {
            let sq = coarse.integrate_interval(l, |t| {
                let v = beta(k, t);
                v * v
            });
            total_sq += sq;
            if k >= 1 {
                discrete += mcp((scale * sq).sqrt(), cfg.lambda1, cfg.xi);
            }
        }
        discrete += mcp((scale * total_sq).sqrt(), cfg.lambda2, cfg.xi);
    }
    discrete /= mf;
    Ok((continuous - discrete).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;

    #[test]
    fn mcp_closed_forms() {
        let (l, xi) = (0.7, 6.0);
        assert_eq!(mcp(0.0, l, xi), 0.0);
        assert!((mcp(5.0_f64, l, xi) - l * l * xi / 2.0).abs() < 1e-15);
        assert!((mcp(-9.0_f64, l, xi) - l * l * xi / 2.0).abs() < 1e-15);
        assert_eq!(mcp_deriv(0.0, l, xi), l);
        assert_eq!(mcp_deriv(l * xi, l, xi), 0.0);
        assert_eq!(mcp(3.0, 0.0, xi), 0.0);
    }

    #[test]
    fn config_rule_and_validation() {
        let cfg = PenaltyConfig::from_rule(0.2_f64, 1e-4, 2, 70).unwrap();
        assert!((cfg.lambda2 - 3f64.sqrt() * 0.2).abs() < 1e-15);
        assert_eq!(cfg.xi, 6.0);
        assert_eq!(cfg.kappa, 70.0);
        assert!(PenaltyConfig::new(-1.0_f64, 0.0, 6.0, 0.0, 10.0).is_err());
        assert!(PenaltyConfig::new(1.0_f64, 0.0, 1.0, 0.0, 10.0).is_err());
    }

    #[test]
    fn zero_and_disjoint_group_norms() {
        let spec = BasisSpec::new(3, 8, 1.0_f64).unwrap();
        let w = crate::basis::local_gram(&spec, 0).unwrap();
        let z = vec![0.0; spec.n_basis()];
        assert_eq!(group_norm(&z, &w).unwrap(), 0.0);
        let mut far = z.clone();
        far[spec.n_basis() - 1] = 3.0;
        assert_eq!(group_norm(&far, &w).unwrap(), 0.0);
        assert!(group_norm(&[1.0, 2.0], &w).is_err());
    }

    #[test]
    fn penalty_vanishes_trivially() {
        let spec = BasisSpec::new(3, 5, 1.0_f64).unwrap();
        let mats = PenaltyMatrices::new(&spec);
        let nb = spec.n_basis();
        let cfg = PenaltyConfig::from_rule(0.3, 0.0, 2, 5).unwrap();
        assert_eq!(penalty_value(&vec![0.0; 3 * nb], &cfg, &mats, 2).unwrap(), 0.0);
        let b: Vec<f64> = (0..3 * nb).map(|i| (i as f64).sin()).collect();
        let zero = PenaltyConfig::from_rule(0.0, 0.0, 2, 5).unwrap();
        assert_eq!(penalty_value(&b, &zero, &mats, 2).unwrap(), 0.0);
        assert!(penalty_value(&b[1..], &cfg, &mats, 2).is_err());
    }

    #[test]
    fn lqa_blocks_vanish_without_penalty() {
        let spec = BasisSpec::new(3, 5, 1.0_f64).unwrap();
        let mats = PenaltyMatrices::new(&spec);
        let nb = spec.n_basis();
        let b: Vec<f64> = (0..2 * nb).map(|i| (i as f64).cos()).collect();
        let cfg = PenaltyConfig::from_rule(0.0, 0.0, 1, 5).unwrap();
        let w = lqa_weights(&b, &cfg, &mats, 1).unwrap();
        assert!(w.blocks.iter().all(|m| m.iter().all(|v| *v == 0.0)));
        let padded = w.padded(2 * nb + 1);
        assert_eq!(padded.nrows(), 2 * nb + 1);
    }

    #[test]
    fn gap_vanishes_for_zero_functions() {
        let cfg = PenaltyConfig::from_rule(0.2_f64, 0.0, 2, 10).unwrap();
        let g = lemma1_gap(|_, _| 0.0, 2, &cfg, 10, 1.0).unwrap();
        assert_eq!(g, 0.0);
    }
}
