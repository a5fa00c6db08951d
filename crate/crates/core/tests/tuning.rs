use locsparse::solver::Loss;
use locsparse::tuning::log_space;
use locsparse::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Setup {
    train: (DesignMatrices<f64>, DVector<f64>),
    valid: (DesignMatrices<f64>, DVector<f64>),
    mats: PenaltyMatrices<f64>,
    base: PenaltyConfig<f64>,
}

fn setup(seed: u64) -> Setup {
    let spec = build_basis(3, 6, 1.0).unwrap();
    let mats = PenaltyMatrices::new(&spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| {
        let x = DMatrix::from_fn(n, spec.n_basis(), |_, _| rng.random_range(-1.0..1.0));
        let z = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
        let d = DesignMatrices::from_parts(x, z, false).unwrap();
        let y = DVector::from_fn(n, |i, _| {
            d.x_mat[(i, 1)] - 0.5 * d.x_mat[(i, 2)] + 0.7 * d.z_mat[(i, 0)] + rng.random_range(-0.2..0.2)
        });
        (d, y)
    };
    let train = draw(60);
    let valid = draw(40);
    let base = PenaltyConfig::from_rule(0.0, 0.0, 1, 6).unwrap();
    Setup { train, valid, mats, base }
}

fn opts() -> FitOptions<f64> {
    FitOptions { max_iter: 60, ..FitOptions::default() }
}

#[test]
fn exhaustive_oracle_on_three_by_three() {
    let s = setup(1);
    let grid = TuningGrid::new(vec![1e-6, 1e-4, 1e-2], vec![0.0, 1e-2, 1e-1], 6.0).unwrap();
    let res = grid_search((&s.train.0, &s.train.1), (&s.valid.0, &s.valid.1), &s.mats, &grid, &opts(), &s.base).unwrap();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &lam in &grid.lambda1_grid {
        for &eta in &grid.eta_grid {
            let cfg = PenaltyConfig::from_rule(lam, eta, 1, 6).unwrap();
            let f = fit(&s.train.0, &s.train.1, &s.mats, &cfg, &opts()).unwrap();
            let score = validation_score(&f, &s.valid.0, &s.valid.1, 0.5, Loss::Quantile).unwrap();
            let i = grid.eta_grid.iter().position(|v| *v == eta).unwrap();
            let j = grid.lambda1_grid.iter().position(|v| *v == lam).unwrap();
            assert_eq!(res.score_table[(i, j)], score);
            if score < best.0 {
                best = (score, eta, lam);
            }
        }
    }
    assert_eq!((res.best_eta, res.best_lambda1), (best.1, best.2));
    assert_eq!(res.best_score(), best.0);
    assert_eq!(res.fits, 9);
    assert_eq!(res.hierarchy_violations, 0);
    let refit = fit(
        &s.train.0,
        &s.train.1,
        &s.mats,
        &PenaltyConfig::from_rule(best.2, best.1, 1, 6).unwrap(),
        &opts(),
    )
    .unwrap();
    assert_eq!(refit, res.best_fit);
}

#[test]
fn duplicate_entries_resolve_to_first() {
    let s = setup(2);
    let grid = TuningGrid::new(vec![1e-4, 1e-4], vec![0.0, 0.0], 6.0).unwrap();
    let res = grid_search((&s.train.0, &s.train.1), (&s.valid.0, &s.valid.1), &s.mats, &grid, &opts(), &s.base).unwrap();
    let first = res.score_table[(0, 0)];
    assert!(res.score_table.iter().all(|v| *v == first));
    assert_eq!(res.best_eta, 1e-4);
    assert_eq!(res.best_lambda1, 0.0);
}

#[test]
fn singleton_grid_equals_direct_fit() {
    let s = setup(3);
    let grid = TuningGrid::new(vec![1e-5], vec![2e-2], 6.0).unwrap();
    let res = grid_search((&s.train.0, &s.train.1), (&s.valid.0, &s.valid.1), &s.mats, &grid, &opts(), &s.base).unwrap();
    let direct = fit(&s.train.0, &s.train.1, &s.mats, &PenaltyConfig::from_rule(2e-2, 1e-5, 1, 6).unwrap(), &opts()).unwrap();
    assert_eq!(res.best_fit, direct);
    assert_eq!(res.score_table.shape(), (1, 1));
}

#[test]
fn grid_search_is_deterministic() {
    let s = setup(4);
    let grid = TuningGrid::new(log_space(1e-6, 1e-3, 3), vec![0.0, 1e-3, 1e-2, 5e-2], 6.0).unwrap();
    let run = || grid_search((&s.train.0, &s.train.1), (&s.valid.0, &s.valid.1), &s.mats, &grid, &opts(), &s.base).unwrap();
    assert_eq!(run(), run());
}

#[test]
fn smooth_only_fits_one_column() {
    let s = setup(5);
    let grid = TuningGrid::new(vec![1e-6, 1e-3], vec![0.0, 1e-2, 1e-1], 6.0).unwrap();
    let o = FitOptions::for_method(Method::Alt4, 0.5);
    let res = grid_search((&s.train.0, &s.train.1), (&s.valid.0, &s.valid.1), &s.mats, &grid, &o, &s.base).unwrap();
    assert_eq!(res.fits, 2);
    for i in 0..2 {
        assert!(res.score_table.row(i).iter().all(|v| *v == res.score_table[(i, 0)]));
    }
    assert_eq!(res.best_lambda1, 0.0);
}

#[test]
fn least_squares_scores_use_squared_error() {
    let s = setup(6);
    let grid = TuningGrid::new(vec![1e-4], vec![0.0], 6.0).unwrap();
    let o = FitOptions::for_method(Method::Alt1, 0.5);
    let res = grid_search((&s.train.0, &s.train.1), (&s.valid.0, &s.valid.1), &s.mats, &grid, &o, &s.base).unwrap();
    let yh = predict(&res.best_fit, &s.valid.0).unwrap();
    let mse = (&s.valid.1 - yh).norm_squared() / 40.0;
    assert!((res.best_score() - mse).abs() < 1e-14);
}

#[test]
fn invalid_grids_rejected() {
    let s = setup(7);
    let bad = TuningGrid { eta_grid: vec![], lambda1_grid: vec![0.0], xi_fixed: 6.0 };
    assert!(grid_search((&s.train.0, &s.train.1), (&s.valid.0, &s.valid.1), &s.mats, &bad, &opts(), &s.base).is_err());
    assert!(TuningGrid::new(vec![-1.0], vec![0.0], 6.0).is_err());
    let ls = log_space::<f64>(1.0, 100.0, 3);
    for (a, b) in ls.iter().zip([1.0, 10.0, 100.0]) {
        assert!((a - b).abs() < 1e-12 * b);
    }
    assert!(log_space::<f64>(1.0, 2.0, 0).is_empty());
}
