//! Clamped B-spline bases on equally spaced knots.
//!
//! A [`BasisSpec`] of degree `d` on `M` intervals of `[0, T]` has `M + d`
//! basis functions. On interval `l` (zero based) the nonzero functions are
//! exactly `l..=l + d`. The local Gram blocks, the roughness matrix and the
//! functional inner products built here feed the design and penalty modules.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::quadrature::QuadratureRule;
use crate::Real;

/// Derivative order accepted by [`eval_basis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    Value,
    Second,
}

impl Derivative {
    pub fn order(self) -> usize {
        match self {
            Derivative::Value => 0,
            Derivative::Second => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec<T> {
    degree: usize,
    m_intervals: usize,
    domain_end: T,
    breakpoints: Vec<T>,
    knots: Vec<T>,
}

impl<T: Real> BasisSpec<T> {
    /// Clamped basis of the given degree on `m_intervals` equal intervals of `[0, domain_end]`.
    pub fn new(degree: usize, m_intervals: usize, domain_end: T) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidArgument(format!(
                "spline degree must be at least 2, got {degree}"
            )));
        }
        if m_intervals < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 knot intervals, got {m_intervals}"
            )));
        }
        if !(domain_end > T::zero()) || !domain_end.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "domain end must be positive and finite, got {}",
                domain_end.as_f64()
            )));
        }
        let m = T::of_usize(m_intervals);
        let breakpoints: Vec<T> = (0..=m_intervals)
            .map(|i| {
                if i == m_intervals {
                    domain_end
                } else {
                    domain_end * T::of_usize(i) / m
                }
            })
            .collect();
        let mut knots = Vec::with_capacity(m_intervals + 2 * degree + 1);
        knots.extend(std::iter::repeat_n(T::zero(), degree));
        knots.extend(breakpoints.iter().copied());
        knots.extend(std::iter::repeat_n(domain_end, degree));
        Ok(Self {
            degree,
            m_intervals,
            domain_end,
            breakpoints,
            knots,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.degree + 1
    }

    pub fn m_intervals(&self) -> usize {
        self.m_intervals
    }

    pub fn domain_end(&self) -> T {
        self.domain_end
    }

    /// Number of basis functions, `M + d`.
    pub fn n_basis(&self) -> usize {
        self.m_intervals + self.degree
    }

    /// The `M + 1` distinct breakpoints `t_0 < ... < t_M`.
    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    /// Full clamped knot vector (boundary knots repeated `d + 1` times).
    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn spacing(&self) -> T {
        self.domain_end / T::of_usize(self.m_intervals)
    }

    /// Indices of the basis functions that can be nonzero on `interval`.
    pub fn band(&self, interval: usize) -> Range<usize> {
        interval..interval + self.degree + 1
    }

    pub fn contains(&self, t: T) -> bool {
        t >= T::zero() && t <= self.domain_end
    }

    fn check_domain(&self, t: T) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                what: "t",
                value: t.as_f64(),
                lo: 0.0,
                hi: self.domain_end.as_f64(),
            })
        }
    }

    /// Interval index containing `t`; the right end belongs to the last interval.
    pub fn interval_of(&self, t: T) -> usize {
        let raw = (t / self.spacing()).floor().to_usize().unwrap_or(0);
        let mut l = raw.min(self.m_intervals - 1);
        // floor() can land one off near breakpoints because of rounding.
        while l > 0 && t < self.breakpoints[l] {
            l -= 1;
        }
        while l + 1 < self.m_intervals && t >= self.breakpoints[l + 1] {
            l += 1;
        }
        l
    }

    /// Values (or derivatives of order `order`) of the `d + 1` functions
    /// supported on the interval containing `t`.
    ///
    /// Returns the index of the first function and the local values.
    pub fn eval_local(&self, t: T, order: usize) -> Result<(usize, Vec<T>)> {
        self.check_domain(t)?;
        let l = self.interval_of(t);
        Ok((l, self.eval_on_interval(l, t, order)))
    }

    /// Local values on a known interval; `t` may sit on either endpoint.
    pub(crate) fn eval_on_interval(&self, interval: usize, t: T, order: usize) -> Vec<T> {
        let ders = self.derivatives_on_span(interval + self.degree, t, order);
        ders.into_iter().nth(order).unwrap_or_default()
    }

    /// Derivatives `0..=n` of the nonzero basis functions at `t` for knot span `span`.
    fn derivatives_on_span(&self, span: usize, u: T, n: usize) -> Vec<Vec<T>> {
        let p = self.degree;
        let knots = &self.knots;
        let mut ndu = vec![vec![T::zero(); p + 1]; p + 1];
        let mut left = vec![T::zero(); p + 1];
        let mut right = vec![T::zero(); p + 1];
        ndu[0][0] = T::one();
        for j in 1..=p {
            left[j] = u - knots[span + 1 - j];
            right[j] = knots[span + j] - u;
            let mut saved = T::zero();
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = vec![vec![T::zero(); p + 1]; n + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![T::zero(); p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = T::one();
            for k in 1..=n {
                let mut d = T::zero();
                let rk = r as isize - k as isize;
                let pk = p as isize - k as isize;
                if rk >= 0 {
                    let (rk, pk) = (rk as usize, pk as usize);
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk {
                    k - 1
                } else {
                    p - r
                };
                for j in j1..=j2 {
                    if pk < 0 {
                        break;
                    }
                    let idx = (rk + j as isize) as usize;
                    let pku = pk as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pku + 1][idx];
                    d += a[s2][j] * ndu[idx][pku];
                }
                if r as isize <= pk {
                    let pku = pk as usize;
                    a[s2][k] = -a[s1][k - 1] / ndu[pku + 1][r];
                    d += a[s2][k] * ndu[r][pku];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = T::of_usize(p);
        for (k, row) in ders.iter_mut().enumerate().skip(1) {
            for v in row.iter_mut() {
                *v *= factor;
            }
            factor *= T::of_usize(p.saturating_sub(k));
        }
        ders
    }

    /// Full vector `B(t)` (or `B''(t)`) of length `M + d`.
    pub fn eval(&self, t: T, deriv: Derivative) -> Result<DVector<T>> {
        let (first, local) = self.eval_local(t, deriv.order())?;
        let mut out = DVector::zeros(self.n_basis());
        for (j, v) in local.into_iter().enumerate() {
            out[first + j] = v;
        }
        Ok(out)
    }

    /// Evaluates `Σ_j coef_j B_j(t)`.
    pub fn eval_combination(&self, coef: &[T], t: T) -> Result<T> {
        check_dim("spline coefficients", self.n_basis(), coef.len())?;
        let (first, local) = self.eval_local(t, 0)?;
        Ok(local
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (j, &v)| acc + v * coef[first + j]))
    }

    /// Gauss–Legendre rule on the knot intervals, exact for degree `2d`.
    pub fn quadrature(&self) -> QuadratureRule<T> {
        QuadratureRule::on_partition(&self.breakpoints, self.degree + 1)
    }
}

/// Builds a clamped basis; see [`BasisSpec::new`].
pub fn build_basis<T: Real>(degree: usize, m_intervals: usize, domain_end: T) -> Result<BasisSpec<T>> {
    BasisSpec::new(degree, m_intervals, domain_end)
}

/// `B(t)` for `Derivative::Value`, `B''(t)` for `Derivative::Second`.
pub fn eval_basis<T: Real>(spec: &BasisSpec<T>, t: T, deriv: Derivative) -> Result<DVector<T>> {
    spec.eval(t, deriv)
}

/// Compact representation of one `W_l`: its nonzero `(d+1) x (d+1)` block.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGram<T> {
    pub offset: usize,
    pub block: DMatrix<T>,
}

impl<T: Real> LocalGram<T> {
    /// Expands into the full `(M+d) x (M+d)` matrix.
    pub fn to_dense(&self, n_basis: usize) -> DMatrix<T> {
        let k = self.block.nrows();
        let mut out = DMatrix::zeros(n_basis, n_basis);
        out.view_mut((self.offset, self.offset), (k, k))
            .copy_from(&self.block);
        out
    }

    /// `vᵀ W_l v` for a length-`(M+d)` slice.
    pub fn quad_form(&self, v: &[T]) -> T {
        let k = self.block.nrows();
        let s = &v[self.offset..self.offset + k];
        let mut acc = T::zero();
        for i in 0..k {
            let mut row = T::zero();
            for j in 0..k {
                row += self.block[(i, j)] * s[j];
            }
            acc += s[i] * row;
        }
        acc
    }
}

fn local_gram_block<T: Real>(spec: &BasisSpec<T>, rule: &QuadratureRule<T>, l: usize) -> DMatrix<T> {
    let k = spec.degree + 1;
    let scale = T::of_usize(spec.m_intervals) / spec.domain_end;
    let mut block = DMatrix::zeros(k, k);
    for (&x, &w) in rule.nodes[l].iter().zip(&rule.weights[l]) {
        let vals = spec.eval_on_interval(l, x, 0);
        for i in 0..k {
            for j in 0..=i {
                block[(i, j)] += w * vals[i] * vals[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            block[(i, j)] *= scale;
            block[(j, i)] = block[(i, j)];
        }
        block[(i, i)] *= scale;
    }
    block
}

/// `W_l` as a dense symmetric matrix: `(M/T) ∫_{t_l}^{t_{l+1}} B_i B_j` on the band, zero elsewhere.
///
/// `interval` is zero based (`0..M`).
pub fn local_gram<T: Real>(spec: &BasisSpec<T>, interval: usize) -> Result<DMatrix<T>> {
    if interval >= spec.m_intervals {
        return Err(Error::IndexOutOfRange {
            what: "knot interval",
            index: interval,
            len: spec.m_intervals,
        });
    }
    let rule = spec.quadrature();
    Ok(LocalGram {
        offset: interval,
        block: local_gram_block(spec, &rule, interval),
    }
    .to_dense(spec.n_basis()))
}

/// Unscaled Gram matrix `∫_0^T B_i B_j dt`.
pub fn full_gram<T: Real>(spec: &BasisSpec<T>) -> DMatrix<T> {
    cross_gram(spec, spec).expect("a basis shares its own domain")
}

/// Roughness matrix `V_ij = ∫_0^T B_i'' B_j'' dt`.
pub fn roughness_matrix<T: Real>(spec: &BasisSpec<T>) -> DMatrix<T> {
    let n = spec.n_basis();
    let k = spec.degree + 1;
    let rule = spec.quadrature();
    let mut v = DMatrix::zeros(n, n);
    for l in 0..spec.m_intervals {
        for (&x, &w) in rule.nodes[l].iter().zip(&rule.weights[l]) {
            let d2 = spec.eval_on_interval(l, x, 2);
            for i in 0..k {
                for j in 0..k {
                    v[(l + i, l + j)] += w * d2[i] * d2[j];
                }
            }
        }
    }
    v
}

/// Cross Gram `∫ A_i(t) B_j(t) dt` between two bases on the same domain.
///
/// Integration runs over the union of both breakpoint sets with enough
/// Gauss points to be exact for the product of the two piecewise polynomials.
pub fn cross_gram<T: Real>(a: &BasisSpec<T>, b: &BasisSpec<T>) -> Result<DMatrix<T>> {
    let tol = T::of(1e-12) * a.domain_end.max(b.domain_end);
    if (a.domain_end - b.domain_end).abs() > tol {
        return Err(Error::InvalidArgument(
            "cross Gram requires bases on the same domain".into(),
        ));
    }
    let mut edges: Vec<T> = a.breakpoints.iter().chain(&b.breakpoints).copied().collect();
    edges.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    edges.dedup_by(|x, y| (*x - *y).abs() <= tol);
    let points = (a.degree + b.degree) / 2 + 1;
    let rule = QuadratureRule::on_partition(&edges, points);
    let mut g = DMatrix::zeros(a.n_basis(), b.n_basis());
    for s in 0..rule.n_intervals() {
        let mid = (edges[s] + edges[s + 1]) * T::of(0.5);
        let la = a.interval_of(mid);
        let lb = b.interval_of(mid);
        for (&x, &w) in rule.nodes[s].iter().zip(&rule.weights[s]) {
            let va = a.eval_on_interval(la, x, 0);
            let vb = b.eval_on_interval(lb, x, 0);
            for (i, &ai) in va.iter().enumerate() {
                for (j, &bj) in vb.iter().enumerate() {
                    g[(la + i, lb + j)] += w * ai * bj;
                }
            }
        }
    }
    Ok(g)
}

/// Precomputed local Gram blocks `W_1..W_M` and roughness matrix `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyMatrices<T> {
    pub gram_local: Vec<LocalGram<T>>,
    pub roughness: DMatrix<T>,
    n_basis: usize,
}

impl<T: Real> PenaltyMatrices<T> {
    pub fn new(spec: &BasisSpec<T>) -> Self {
        let rule = spec.quadrature();
        let gram_local = (0..spec.m_intervals)
            .map(|l| LocalGram {
                offset: l,
                block: local_gram_block(spec, &rule, l),
            })
            .collect();
        Self {
            gram_local,
            roughness: roughness_matrix(spec),
            n_basis: spec.n_basis(),
        }
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn m_intervals(&self) -> usize {
        self.gram_local.len()
    }
}

/// Composite trapezoid weights times basis values: row `g` holds `w_g B(t_g)ᵀ`.
///
/// Multiplying a matrix of sampled curves (one row per curve) by this
/// operator yields all functional inner products at once.
pub fn inner_product_operator<T: Real>(spec: &BasisSpec<T>, grid: &[T]) -> Result<DMatrix<T>> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument(
            "a sampling grid needs at least two points".into(),
        ));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidArgument(
                "sampling grid must be strictly increasing".into(),
            ));
        }
    }
    for &t in [grid[0], grid[grid.len() - 1]].iter() {
        spec.check_domain(t)?;
    }
    let tol = T::of(1e-9) * spec.domain_end;
    if grid[0] > tol || spec.domain_end - grid[grid.len() - 1] > tol {
        return Err(Error::InvalidArgument(format!(
            "sampling grid [{}, {}] does not cover [0, {}]",
            grid[0].as_f64(),
            grid[grid.len() - 1].as_f64(),
            spec.domain_end.as_f64()
        )));
    }
    let half = T::of(0.5);
    let p = grid.len();
    let mut op = DMatrix::zeros(p, spec.n_basis());
    for (g, &t) in grid.iter().enumerate() {
        let t = t.max(T::zero()).min(spec.domain_end);
        let w = if g == 0 {
            (grid[1] - grid[0]) * half
        } else if g == p - 1 {
            (grid[p - 1] - grid[p - 2]) * half
        } else {
            (grid[g + 1] - grid[g - 1]) * half
        };
        let (first, vals) = spec.eval_local(t, 0)?;
        for (j, v) in vals.into_iter().enumerate() {
            op[(g, first + j)] = w * v;
        }
    }
    Ok(op)
}

/// `x_j = ∫_0^T X(t) B_j(t) dt` for a curve sampled on `grid`, by composite trapezoid.
///
/// Accuracy is that of the trapezoid rule on the caller's grid; the grid
/// must be fine enough for the intended tolerance.
pub fn functional_inner_products<T: Real>(
    spec: &BasisSpec<T>,
    grid: &[T],
    values: &[T],
) -> Result<DVector<T>> {
    check_dim("curve samples", grid.len(), values.len())?;
    let op = inner_product_operator(spec, grid)?;
    Ok(op.tr_mul(&DVector::from_column_slice(values)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_follow_intervals_plus_degree() {
        let s = build_basis(3, 70, 1.0_f64).unwrap();
        assert_eq!(s.n_basis(), 73);
        assert_eq!(s.breakpoints().len(), 71);
        let s = build_basis(2, 2, 1.0_f64).unwrap();
        assert_eq!(s.n_basis(), 4);
        let s = build_basis(3, 4, 2.0_f64).unwrap();
        assert!((s.spacing() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_arguments() {
        assert!(matches!(build_basis(1, 10, 1.0_f64), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_basis(3, 1, 1.0_f64), Err(Error::InvalidArgument(_))));
        assert!(build_basis(3, 10, 0.0_f64).is_err());
        let s = build_basis(3, 10, 1.0_f64).unwrap();
        assert!(matches!(s.eval(1.5, Derivative::Value), Err(Error::OutOfDomain { .. })));
        assert!(matches!(local_gram(&s, 10), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn breakpoints_are_uniform() {
        let s = build_basis(3, 37, 2.5_f64).unwrap();
        let h = s.spacing();
        for w in s.breakpoints().windows(2) {
            assert!(((w[1] - w[0]) - h).abs() <= 1e-12 * h);
        }
    }

    #[test]
    fn local_support_has_at_most_order_nonzeros() {
        let s = build_basis(3, 9, 1.0_f64).unwrap();
        for i in 0..=200 {
            let t = i as f64 / 200.0;
            let b = s.eval(t, Derivative::Value).unwrap();
            assert!(b.iter().filter(|v| **v != 0.0).count() <= 4);
            let l = s.interval_of(t);
            for j in 0..s.n_basis() {
                if !s.band(l).contains(&j) {
                    assert_eq!(b[j], 0.0);
                }
            }
        }
    }

    #[test]
    fn endpoint_values_are_clamped() {
        let s = build_basis(3, 5, 1.0_f64).unwrap();
        let b0 = s.eval(0.0, Derivative::Value).unwrap();
        let b1 = s.eval(1.0, Derivative::Value).unwrap();
        assert!((b0[0] - 1.0).abs() < 1e-15);
        assert!((b1[s.n_basis() - 1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gram_band_is_exactly_zero_outside() {
        let s = build_basis(3, 8, 1.0_f64).unwrap();
        for l in 0..8 {
            let w = local_gram(&s, l).unwrap();
            for i in 0..s.n_basis() {
                for j in 0..s.n_basis() {
                    if !(s.band(l).contains(&i) && s.band(l).contains(&j)) {
                        assert_eq!(w[(i, j)], 0.0);
                    }
                }
            }
        }
        let w0 = local_gram(&s, 0).unwrap();
        assert_eq!(w0[(0, s.n_basis() - 1)], 0.0);
    }

    #[test]
    fn single_precision_basis_is_usable() {
        let s = build_basis(3, 10, 1.0_f32).unwrap();
        let b = s.eval(0.37, Derivative::Value).unwrap();
        assert!((b.sum() - 1.0).abs() < 1e-5);
    }
}
