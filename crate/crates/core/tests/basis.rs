mod common;

use approx::assert_relative_eq;
use common::*;
use locsparse::*;
use proptest::prelude::*;

#[test]
fn build_basis_examples() {
    let s = build_basis(3, 70, 1.0).unwrap();
    assert_eq!(s.n_basis(), 73);
    assert_eq!(s.breakpoints().len(), 71);
    assert_eq!(build_basis(2, 2, 1.0).unwrap().n_basis(), 4);
    assert_relative_eq!(build_basis(3, 4, 2.0).unwrap().spacing(), 0.5, epsilon = 1e-15);
    assert!(build_basis(1, 10, 1.0).is_err());
    assert!(build_basis(3, 1, 1.0).is_err());
    assert!(build_basis(3, 10, 0.0).is_err());
}

#[test]
fn evaluation_matches_cox_de_boor() {
    for &(deg, m, t_end) in &[(2, 5, 1.0), (3, 7, 2.0), (4, 70, 1.0)] {
        let s = build_basis(deg, m, t_end).unwrap();
        let knots = clamped_knots(deg, m, t_end);
        for i in 0..=200 {
            let t = t_end * i as f64 / 200.0;
            let v = eval_basis(&s, t, Derivative::Value).unwrap();
            for j in 0..s.n_basis() {
                assert_relative_eq!(v[j], cox_de_boor(&knots, j, deg, t), epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn second_derivative_matches_finite_differences() {
    let s = build_basis(3, 10, 1.0).unwrap();
    let h = 1e-5;
    for i in 0..50 {
        // Stay away from breakpoints where B'' jumps.
        let t = 0.013 + 0.97 * (i as f64 + 0.37) / 50.0;
        if (t * 10.0 - (t * 10.0).round()).abs() < 1e-3 {
            continue;
        }
        let d2 = eval_basis(&s, t, Derivative::Second).unwrap();
        let vp = eval_basis(&s, t + h, Derivative::Value).unwrap();
        let v0 = eval_basis(&s, t, Derivative::Value).unwrap();
        let vm = eval_basis(&s, t - h, Derivative::Value).unwrap();
        for j in 0..s.n_basis() {
            let fd = (vp[j] - 2.0 * v0[j] + vm[j]) / (h * h);
            let scale = d2[j].abs().max(1.0);
            assert!((fd - d2[j]).abs() <= 1e-4 * scale, "t={t} j={j} fd={fd} exact={}", d2[j]);
        }
    }
}

#[test]
fn out_of_domain_rejected() {
    let s = build_basis(3, 10, 1.0).unwrap();
    assert!(eval_basis(&s, -0.01, Derivative::Value).is_err());
    assert!(eval_basis(&s, 1.01, Derivative::Value).is_err());
    assert!(local_gram(&s, 10).is_err());
}

#[test]
fn local_gram_matches_adaptive_quadrature() {
    let deg = 3;
    let m = 6;
    let t_end = 1.5;
    let s = build_basis(deg, m, t_end).unwrap();
    let knots = clamped_knots(deg, m, t_end);
    let h = t_end / m as f64;
    for l in 0..m {
        let w = local_gram(&s, l).unwrap();
        let (a, b) = (h * l as f64, h * (l + 1) as f64);
        for i in 0..s.n_basis() {
            for j in 0..s.n_basis() {
                let f = |t: f64| cox_de_boor(&knots, i, deg, t) * cox_de_boor(&knots, j, deg, t);
                let oracle = m as f64 / t_end * adaptive_simpson(&f, a, b, 1e-14);
                assert!((w[(i, j)] - oracle).abs() < 1e-10, "l={l} ({i},{j})");
                let in_band = (l..=l + deg).contains(&i) && (l..=l + deg).contains(&j);
                if !in_band {
                    assert_eq!(w[(i, j)], 0.0);
                }
            }
        }
    }
}

#[test]
fn interval_additivity() {
    let s = build_basis(3, 9, 2.0).unwrap();
    let full = full_gram(&s);
    let mut acc = nalgebra::DMatrix::zeros(s.n_basis(), s.n_basis());
    for l in 0..9 {
        acc += local_gram(&s, l).unwrap() * (2.0 / 9.0);
    }
    assert!((acc - &full).abs().max() < 1e-10);
    // Disjoint supports at the far corner.
    assert_eq!(full[(0, s.n_basis() - 1)], 0.0);
}

/// Greville abscissae: coefficients reproducing `t` exactly.
fn greville(s: &BasisSpec<f64>) -> Vec<f64> {
    let k = s.knots();
    let d = s.degree();
    (0..s.n_basis())
        .map(|j| k[j + 1..=j + d].iter().sum::<f64>() / d as f64)
        .collect()
}

#[test]
fn roughness_annihilates_affine_functions() {
    for &(deg, m) in &[(2, 5), (3, 10), (4, 7)] {
        let s = build_basis(deg, m, 1.0).unwrap();
        let v = roughness_matrix(&s);
        let ones = nalgebra::DVector::from_element(s.n_basis(), 1.0);
        let lin = nalgebra::DVector::from_vec(greville(&s));
        let affine = &ones * 0.7 - &lin * 2.3;
        for b in [&ones, &lin, &affine] {
            let qf = (b.transpose() * &v * b)[(0, 0)];
            assert!(qf.abs() <= 1e-10 * b.norm_squared().max(1.0), "deg {deg}: {qf}");
        }
    }
}

#[test]
fn roughness_matches_quadrature_oracle() {
    let deg = 3;
    let m = 8;
    let s = build_basis(deg, m, 1.0).unwrap();
    let v = roughness_matrix(&s);
    let knots = clamped_knots(deg, m, 1.0);
    let b: Vec<f64> = (0..s.n_basis()).map(|j| ((j * 37 % 11) as f64 - 5.0) / 3.0).collect();
    let f = |t: f64| {
        let d2: f64 = (0..b.len()).map(|j| b[j] * cox_de_boor_d2(&knots, j, deg, t)).sum();
        d2 * d2
    };
    let edges: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    // Evaluate each cell slightly inside so the one-sided derivatives are used.
    let oracle: f64 = edges
        .windows(2)
        .map(|w| adaptive_simpson(&f, w[0] + 1e-13, w[1] - 1e-13, 1e-12))
        .sum();
    let bv = nalgebra::DVector::from_vec(b);
    let qf = (bv.transpose() * &v * &bv)[(0, 0)];
    assert!((qf - oracle).abs() < 1e-8 * oracle.max(1.0), "{qf} vs {oracle}");
}

#[test]
fn inner_products_of_sampled_sine() {
    let s = build_basis(3, 10, 1.0).unwrap();
    let knots = clamped_knots(3, 10, 1.0);
    let grid: Vec<f64> = (0..1001).map(|i| i as f64 / 1000.0).collect();
    let vals: Vec<f64> = grid.iter().map(|t| (2.0 * std::f64::consts::PI * t).sin()).collect();
    let x = functional_inner_products(&s, &grid, &vals).unwrap();
    let edges: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    for j in 0..s.n_basis() {
        let f = |t: f64| (2.0 * std::f64::consts::PI * t).sin() * cox_de_boor(&knots, j, 3, t);
        let oracle = piecewise_simpson(&f, &edges, 1e-13);
        assert!((x[j] - oracle).abs() < 1e-6, "j={j}: {} vs {oracle}", x[j]);
    }
    let zero = functional_inner_products(&s, &grid, &vec![0.0; grid.len()]).unwrap();
    assert!(zero.iter().all(|v| *v == 0.0));
}

#[test]
fn inner_products_of_basis_curves_are_gram_columns() {
    let s = build_basis(3, 6, 1.0).unwrap();
    let full = full_gram(&s);
    // Sampled B_j on a fine grid: trapezoid error only.
    let grid: Vec<f64> = (0..=6000).map(|i| i as f64 / 6000.0).collect();
    for j in [0, 3, 8] {
        let vals: Vec<f64> = grid
            .iter()
            .map(|&t| eval_basis(&s, t, Derivative::Value).unwrap()[j])
            .collect();
        let x = functional_inner_products(&s, &grid, &vals).unwrap();
        for i in 0..s.n_basis() {
            assert!((x[i] - full[(i, j)]).abs() < 1e-6);
        }
    }
    // As coefficients: exact.
    let coefs = nalgebra::DMatrix::from_fn(1, s.n_basis(), |_, c| if c == 4 { 1.0 } else { 0.0 });
    let ip = design::curve_inner_products(&Curves::Coefficients { basis: s.clone(), coefs }, &s).unwrap();
    for i in 0..s.n_basis() {
        assert_relative_eq!(ip[(0, i)], full[(i, 4)], epsilon = 1e-13);
    }
}

#[test]
fn inner_product_grid_validation() {
    let s = build_basis(3, 6, 1.0).unwrap();
    assert!(functional_inner_products(&s, &[0.0, 0.6, 0.5, 1.0], &[0.0; 4]).is_err());
    assert!(functional_inner_products(&s, &[0.0, 0.5, 0.9], &[0.0; 3]).is_err());
    assert!(functional_inner_products(&s, &[0.0, 0.5, 1.0], &[0.0; 2]).is_err());
}

#[test]
fn single_precision_tracks_double() {
    let s64 = build_basis(3, 12, 1.0).unwrap();
    let s32 = BasisSpec32::new(3, 12, 1.0).unwrap();
    let w64 = local_gram(&s64, 5).unwrap();
    let w32 = local_gram(&s32, 5).unwrap();
    for (a, b) in w64.iter().zip(w32.iter()) {
        assert!((a - *b as f64).abs() < 1e-5);
    }
}

proptest! {
    #[test]
    fn partition_of_unity(deg in 2usize..6, m in 2usize..40, t_end in 0.1f64..10.0, u in 0.0f64..=1.0) {
        let s = build_basis(deg, m, t_end).unwrap();
        let v = eval_basis(&s, u * t_end, Derivative::Value).unwrap();
        prop_assert!((v.sum() - 1.0).abs() < 1e-12);
        prop_assert!(v.iter().all(|x| *x >= -1e-15));
        prop_assert!(v.iter().filter(|x| **x != 0.0).count() <= deg + 1);
    }

    #[test]
    fn local_gram_band_and_psd(deg in 2usize..5, m in 2usize..20, pick in 0usize..1000) {
        let s = build_basis(deg, m, 1.0).unwrap();
        let l = pick % m;
        let w = local_gram(&s, l).unwrap();
        for i in 0..s.n_basis() {
            for j in 0..s.n_basis() {
                if !(l..=l + deg).contains(&i) || !(l..=l + deg).contains(&j) {
                    prop_assert_eq!(w[(i, j)], 0.0);
                }
            }
        }
        let eig = w.symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|e| *e >= -1e-10));
    }

    #[test]
    fn roughness_psd(deg in 2usize..5, m in 2usize..20) {
        let s = build_basis(deg, m, 1.0).unwrap();
        let v = roughness_matrix(&s);
        let eig = v.symmetric_eigenvalues();
        let scale = eig.iter().fold(1.0f64, |a: f64, e: &f64| a.max(e.abs()));
        prop_assert!(eig.iter().all(|e| *e >= -1e-10 * scale));
    }
}
