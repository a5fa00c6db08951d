#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Output;

use locsparse::simbench::{beta_projections, curve_basis, gen_sample, ErrorCase, ScenarioId, ScenarioSpec};
use locsparse::Derivative;
use locsparse_cli::io::{write_functional, write_scalars, FunctionalCsv, ScalarTable};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_locsparse")
}

pub fn run(args: &[&str]) -> Output {
    std::process::Command::new(bin()).args(args).output().expect("spawn locsparse")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Scenario draw sampled on `points` equally spaced values of [0, 1], written as
/// `<stem>_curves.csv` and `<stem>_scalars.csv` with columns `z1..zq, y`.
pub fn write_sim(dir: &Path, stem: &str, scenario: ScenarioId, error: ErrorCase, n: usize, points: usize, seed: u64) -> (PathBuf, PathBuf) {
    let spec = ScenarioSpec::new(scenario);
    let basis = curve_basis::<f64>();
    let proj = beta_projections(&spec, &basis).unwrap();
    let sim = gen_sample(n, &spec, &proj, error, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let grid: Vec<f64> = (0..points).map(|j| j as f64 / (points - 1) as f64).collect();
    let mut values = DMatrix::zeros(n, points);
    for (j, &t) in grid.iter().enumerate() {
        let b = basis.eval(t, Derivative::Value).unwrap();
        for i in 0..n {
            values[(i, j)] = sim.coefs.row(i).iter().zip(b.iter()).map(|(c, v)| c * v).sum::<f64>();
        }
    }
    let q = spec.q;
    let mut names: Vec<String> = (1..=q).map(|k| format!("z{k}")).collect();
    names.push("y".into());
    let scal = DMatrix::from_fn(n, q + 1, |i, k| if k < q { sim.response.z[(i, k)] } else { sim.response.y[i] });
    let c = dir.join(format!("{stem}_curves.csv"));
    let s = dir.join(format!("{stem}_scalars.csv"));
    write_functional(&c, &FunctionalCsv { grid, values }).unwrap();
    write_scalars(&s, &ScalarTable { names, values: scal }).unwrap();
    (c, s)
}

/// Small, fast configuration for a fit on files from [`write_sim`].
pub fn write_config(dir: &Path, name: &str, extra: &str) -> PathBuf {
    let p = dir.join(name);
    let text = format!(
        "# test configuration\ncurves = train_curves.csv\nscalars = train_scalars.csv\nintervals = 10\nlambda1 = 0.01\neta = 1e-6\nmax_iter = 60\n{extra}\n"
    );
    std::fs::write(&p, text).unwrap();
    p
}

pub fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
