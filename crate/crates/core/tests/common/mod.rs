#![allow(dead_code)]

/// Cox–de Boor recursion for `B_{i,p}(t)` on `knots`, right-continuous except
/// at the right end of the domain.
pub fn cox_de_boor(knots: &[f64], i: usize, p: usize, t: f64) -> f64 {
    let last = *knots.last().unwrap();
    if p == 0 {
        let (a, b) = (knots[i], knots[i + 1]);
        if a < b && ((t >= a && t < b) || (t == last && b == last)) {
            return 1.0;
        }
        return 0.0;
    }
    let mut v = 0.0;
    let d1 = knots[i + p] - knots[i];
    if d1 > 0.0 {
        v += (t - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, t);
    }
    let d2 = knots[i + p + 1] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + p + 1] - t) / d2 * cox_de_boor(knots, i + 1, p - 1, t);
    }
    v
}

/// Second derivative by repeated differentiation of the recursion.
pub fn cox_de_boor_d2(knots: &[f64], i: usize, p: usize, t: f64) -> f64 {
    fn d(knots: &[f64], i: usize, p: usize, order: usize, t: f64) -> f64 {
        if order == 0 {
            return cox_de_boor(knots, i, p, t);
        }
        let mut v = 0.0;
        let d1 = knots[i + p] - knots[i];
        if d1 > 0.0 {
            v += p as f64 / d1 * d(knots, i, p - 1, order - 1, t);
        }
        let d2 = knots[i + p + 1] - knots[i + 1];
        if d2 > 0.0 {
            v -= p as f64 / d2 * d(knots, i + 1, p - 1, order - 1, t);
        }
        v
    }
    d(knots, i, p, 2, t)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Adaptive Simpson over each cell of `edges`.
pub fn piecewise_simpson<F: Fn(f64) -> f64>(f: &F, edges: &[f64], tol: f64) -> f64 {
    edges.windows(2).map(|w| adaptive_simpson(f, w[0], w[1], tol)).sum()
}

/// Clamped knot vector with `m` uniform intervals on `[0, t_end]`.
pub fn clamped_knots(degree: usize, m: usize, t_end: f64) -> Vec<f64> {
    let mut k = vec![0.0; degree];
    for i in 0..=m {
        k.push(t_end * i as f64 / m as f64);
    }
    k.extend(std::iter::repeat(t_end).take(degree));
    k
}

/// Quantile regression by vertex enumeration of its linear program: some
/// minimizer interpolates `p` observations, so the best of all `p`-subset
/// interpolants is a global minimizer.
pub fn quantile_regression_vertex_oracle(x: &[Vec<f64>], y: &[f64], tau: f64) -> Vec<f64> {
    let n = y.len();
    let p = x[0].len();
    let mut best = (f64::INFINITY, vec![0.0; p]);
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        let a = nalgebra::DMatrix::from_fn(p, p, |r, c| x[idx[r]][c]);
        let rhs = nalgebra::DVector::from_fn(p, |r, _| y[idx[r]]);
        {
            if let Some(beta) = a.lu().solve(&rhs) {
                if beta.iter().all(|v| v.is_finite()) {
                    let loss: f64 = (0..n)
                        .map(|i| {
                            let r = y[i] - (0..p).map(|j| x[i][j] * beta[j]).sum::<f64>();
                            r * (tau - if r < 0.0 { 1.0 } else { 0.0 })
                        })
                        .sum();
                    if loss < best.0 - 1e-12 {
                        best = (loss, beta.iter().copied().collect());
                    }
                }
            }
        }
        // next combination
        let mut k = p;
        loop {
            if k == 0 {
                return best.1;
            }
            k -= 1;
            if idx[k] < n - p + k {
                idx[k] += 1;
                for j in k + 1..p {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}
