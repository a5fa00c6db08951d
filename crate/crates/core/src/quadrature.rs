//! Gauss–Legendre rules, reference nodes and per-interval composite rules.

use crate::Real;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Roots are found by Newton iteration on the three-term recurrence, which
/// is accurate to machine precision for the small orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            deriv = dp;
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        if dp != 0.0 {
            deriv = dp;
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite rule: one Gauss–Legendre rule mapped onto each interval of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    pub nodes: Vec<Vec<T>>,
    pub weights: Vec<Vec<T>>,
    pub points_per_interval: usize,
}

impl<T: Real> QuadratureRule<T> {
    /// Builds the rule on consecutive intervals `[edges[i], edges[i + 1]]`.
    pub fn on_partition(edges: &[T], points_per_interval: usize) -> Self {
        let (ref_nodes, ref_weights) = gauss_legendre(points_per_interval);
        let half = T::of(0.5);
        let mut nodes = Vec::with_capacity(edges.len().saturating_sub(1));
        let mut weights = Vec::with_capacity(edges.len().saturating_sub(1));
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = (a + b) * half;
            let rad = (b - a) * half;
            nodes.push(ref_nodes.iter().map(|&x| mid + rad * T::of(x)).collect());
            weights.push(ref_weights.iter().map(|&x| rad * T::of(x)).collect());
        }
        Self {
            nodes,
            weights,
            points_per_interval,
        }
    }

    pub fn n_intervals(&self) -> usize {
        self.nodes.len()
    }

    /// Integrates `f` over the whole partition.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        let mut total = T::zero();
        for (xs, ws) in self.nodes.iter().zip(&self.weights) {
            for (&x, &w) in xs.iter().zip(ws) {
                total += w * f(x);
            }
        }
        total
    }

    /// Integrates `f` over a single interval of the partition.
    pub fn integrate_interval<F: FnMut(T) -> T>(&self, interval: usize, mut f: F) -> T {
        self.nodes[interval]
            .iter()
            .zip(&self.weights[interval])
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in 1..=40 {
            let (_, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_2n_minus_1() {
        for n in 1..=8 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn composite_rule_integrates_sine() {
        let edges: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let rule = QuadratureRule::on_partition(&edges, 6);
        let v = rule.integrate(|t| (std::f64::consts::PI * t).sin());
        assert!((v - 2.0 / std::f64::consts::PI).abs() < 1e-13);
    }
}
