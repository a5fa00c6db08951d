//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use locsparse::simbench::ScenarioId;
use locsparse::tuning::log_space;
use locsparse::{Method, ThresholdMode};

use crate::error::{CliError, CliResult};

/// `(key, default, description)`; the source of the `--help` key listing.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("curves", "", "training curves, functional CSV (header row = sampling grid)"),
    ("scalars", "", "training scalar covariates plus response, CSV with a header"),
    ("response", "", "response column of the scalar CSV (default: y; fat for tecator)"),
    ("valid_curves", "", "validation curves for tune"),
    ("valid_scalars", "", "validation scalars for tune"),
    ("model", "", "fitted model bundle (coefficients.json) for predict and diagnose"),
    ("output", "out", "output directory"),
    ("tecator_file", "", "raw Tecator text file for convert-tecator"),
    ("degree", "3", "B-spline degree"),
    ("intervals", "", "number of knot intervals (default: 30 for tecator, 70 otherwise)"),
    ("lambda1", "0.01", "individual MCP level for fit; the group level is sqrt(q+1) * lambda1"),
    ("eta", "1e-6", "roughness weight for fit"),
    ("xi", "6", "MCP concavity"),
    ("eta_grid", "1e-8,1e-7,1e-6,1e-5,1e-4,1e-3,1e-2", "roughness grid for tune, simulate, tecator"),
    ("lambda1_grid", "0,1e-4..1:10", "selection grid; lo..hi:count means log-spaced"),
    ("tau", "0.5", "quantile levels, comma separated"),
    ("method", "proposed", "alt1..alt5 or proposed"),
    ("methods", "all", "methods compared by simulate"),
    ("rho", "1e-6", "perturbation of the check loss majorizer"),
    ("max_iter", "200", "iteration cap"),
    ("conv_tol", "1e-4", "stop when the coefficient step norm falls below this"),
    ("zero_threshold", "1e-3", "hard-threshold cutoff applied after convergence"),
    ("threshold_mode", "groupwise", "groupwise or elementwise"),
    ("intercept", "true", "fit an unpenalized intercept"),
    ("center", "false", "center response, scalars and curves before fitting"),
    ("seed", "20240101", "seed for every random draw"),
    ("scenario", "I", "simulation scenario: I, II or III"),
    ("error_case", "1", "1 normal, 2 t(3), 3 heteroscedastic, 0 noiseless"),
    ("snr", "4", "signal-to-noise variance ratio of error case 1"),
    ("n", "300", "simulation training size"),
    ("n_valid", "500", "simulation validation size"),
    ("replicates", "100", "simulation replicates"),
    ("train_size", "129", "tecator training rows (taken first in file order)"),
    ("tune_size", "43", "tecator tuning rows, following the training rows"),
    ("test_size", "43", "tecator test rows, following the tuning rows; later rows are ignored"),
    ("partitions", "0", "tecator random re-partitions of the same sizes"),
    ("curve_points", "501", "points per coefficient function in beta_curves.csv"),
    ("kde_points", "512", "evaluation points of the residual density"),
    ("qq_draws", "100", "simulated responses in the QQ diagnostic"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub curves: Option<PathBuf>,
    pub scalars: Option<PathBuf>,
    pub response: Option<String>,
    pub valid_curves: Option<PathBuf>,
    pub valid_scalars: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output: PathBuf,
    pub tecator_file: Option<PathBuf>,
    pub degree: usize,
    pub intervals: Option<usize>,
    pub lambda1: f64,
    pub eta: f64,
    pub xi: f64,
    pub eta_grid: Vec<f64>,
    pub lambda1_grid: Vec<f64>,
    pub taus: Vec<f64>,
    pub method: Method,
    pub methods: Vec<Method>,
    pub rho: f64,
    pub max_iter: usize,
    pub conv_tol: f64,
    pub zero_threshold: f64,
    pub threshold_mode: ThresholdMode,
    pub intercept: bool,
    pub center: bool,
    pub seed: u64,
    pub scenario: ScenarioId,
    pub error_case: u8,
    pub snr: f64,
    pub n: usize,
    pub n_valid: usize,
    pub replicates: usize,
    pub train_size: usize,
    pub tune_size: usize,
    pub test_size: usize,
    pub partitions: usize,
    pub curve_points: usize,
    pub kde_points: usize,
    pub qq_draws: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut lambda1_grid = vec![0.0];
        lambda1_grid.extend(log_space::<f64>(1e-4, 1.0, 10));
        Self {
            curves: None,
            scalars: None,
            response: None,
            valid_curves: None,
            valid_scalars: None,
            model: None,
            output: PathBuf::from("out"),
            tecator_file: None,
            degree: 3,
            intervals: None,
            lambda1: 0.01,
            eta: 1e-6,
            xi: 6.0,
            eta_grid: log_space(1e-8, 1e-2, 7),
            lambda1_grid,
            taus: vec![0.5],
            method: Method::Proposed,
            methods: Method::ALL.to_vec(),
            rho: 1e-6,
            max_iter: 200,
            conv_tol: 1e-4,
            zero_threshold: 1e-3,
            threshold_mode: ThresholdMode::Groupwise,
            intercept: true,
            center: false,
            seed: 20240101,
            scenario: ScenarioId::I,
            error_case: 1,
            snr: 4.0,
            n: 300,
            n_valid: 500,
            replicates: 100,
            train_size: 129,
            tune_size: 43,
            test_size: 43,
            partitions: 0,
            curve_points: 501,
            kde_points: 512,
            qq_draws: 100,
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Input(format!("invalid value {value:?} for {key}: expected {what}"))
}

fn parse_f64(key: &str, v: &str) -> CliResult<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad(key, v, "a finite number"))
}

fn parse_usize(key: &str, v: &str) -> CliResult<usize> {
    v.parse().map_err(|_| bad(key, v, "a nonnegative integer"))
}

fn parse_bool(key: &str, v: &str) -> CliResult<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, v, "true or false")),
    }
}

/// Comma-separated numbers; an item `lo..hi:count` expands to a log-spaced run.
fn parse_list(key: &str, v: &str) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((range, count)) = item.split_once(':') {
            let (lo, hi) = range
                .split_once("..")
                .ok_or_else(|| bad(key, item, "lo..hi:count"))?;
            let (lo, hi) = (parse_f64(key, lo)?, parse_f64(key, hi)?);
            if !(lo > 0.0 && hi >= lo) {
                return Err(bad(key, item, "0 < lo <= hi in a log-spaced range"));
            }
            out.extend(log_space::<f64>(lo, hi, parse_usize(key, count)?));
        } else {
            out.push(parse_f64(key, item)?);
        }
    }
    if out.is_empty() {
        return Err(bad(key, v, "at least one number"));
    }
    Ok(out)
}

fn parse_method(key: &str, v: &str) -> CliResult<Method> {
    Method::parse(v).ok_or_else(|| bad(key, v, "one of alt1..alt5, proposed"))
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let v = value.trim();
        match key {
            "curves" => self.curves = opt_path(v),
            "scalars" => self.scalars = opt_path(v),
            "response" => self.response = (!v.is_empty()).then(|| v.to_string()),
            "valid_curves" => self.valid_curves = opt_path(v),
            "valid_scalars" => self.valid_scalars = opt_path(v),
            "model" => self.model = opt_path(v),
            "output" => self.output = PathBuf::from(v),
            "tecator_file" => self.tecator_file = opt_path(v),
            "degree" => self.degree = parse_usize(key, v)?,
            "intervals" => self.intervals = if v.is_empty() { None } else { Some(parse_usize(key, v)?) },
            "lambda1" => self.lambda1 = parse_f64(key, v)?,
            "eta" => self.eta = parse_f64(key, v)?,
            "xi" => self.xi = parse_f64(key, v)?,
            "eta_grid" => self.eta_grid = parse_list(key, v)?,
            "lambda1_grid" => self.lambda1_grid = parse_list(key, v)?,
            "tau" => self.taus = parse_list(key, v)?,
            "method" => self.method = parse_method(key, v)?,
            "methods" => {
                self.methods = if v.eq_ignore_ascii_case("all") {
                    Method::ALL.to_vec()
                } else {
                    v.split(',').map(|m| parse_method(key, m.trim())).collect::<CliResult<_>>()?
                }
            }
            "rho" => self.rho = parse_f64(key, v)?,
            "max_iter" => self.max_iter = parse_usize(key, v)?,
            "conv_tol" => self.conv_tol = parse_f64(key, v)?,
            "zero_threshold" => self.zero_threshold = parse_f64(key, v)?,
            "threshold_mode" => {
                self.threshold_mode = match v.to_ascii_lowercase().as_str() {
                    "groupwise" => ThresholdMode::Groupwise,
                    "elementwise" => ThresholdMode::Elementwise,
                    _ => return Err(bad(key, v, "groupwise or elementwise")),
                }
            }
            "intercept" => self.intercept = parse_bool(key, v)?,
            "center" => self.center = parse_bool(key, v)?,
            "seed" => self.seed = v.parse().map_err(|_| bad(key, v, "an unsigned integer"))?,
            "scenario" => self.scenario = ScenarioId::parse(v).ok_or_else(|| bad(key, v, "I, II or III"))?,
            "error_case" => {
                self.error_case = match v {
                    "0" | "1" | "2" | "3" => v.parse().expect("digit"),
                    _ => return Err(bad(key, v, "0, 1, 2 or 3")),
                }
            }
            "snr" => self.snr = parse_f64(key, v)?,
            "n" => self.n = parse_usize(key, v)?,
            "n_valid" => self.n_valid = parse_usize(key, v)?,
            "replicates" => self.replicates = parse_usize(key, v)?,
            "train_size" => self.train_size = parse_usize(key, v)?,
            "tune_size" => self.tune_size = parse_usize(key, v)?,
            "test_size" => self.test_size = parse_usize(key, v)?,
            "partitions" => self.partitions = parse_usize(key, v)?,
            "curve_points" => self.curve_points = parse_usize(key, v)?,
            "kde_points" => self.kde_points = parse_usize(key, v)?,
            "qq_draws" => self.qq_draws = parse_usize(key, v)?,
            _ => return Err(CliError::Input(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> CliResult<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("{origin}:{}: expected key = value", i + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| CliError::Input(format!("{origin}:{}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut c = Self::default();
        c.apply_text(text, "config")?;
        Ok(c)
    }

    /// Reads a configuration file. Relative paths inside it are resolved
    /// against the file's directory.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut c = Self::default();
        c.apply_text(&text, &path.display().to_string())?;
        if let Some(dir) = path.parent() {
            c.resolve_relative(dir);
        }
        Ok(c)
    }

    fn resolve_relative(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        for p in [
            &mut self.curves,
            &mut self.scalars,
            &mut self.valid_curves,
            &mut self.valid_scalars,
            &mut self.model,
            &mut self.tecator_file,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.output);
    }

    /// Range checks that do not depend on the subcommand.
    pub fn validate(&self) -> CliResult<()> {
        let fail = |m: String| Err(CliError::Input(m));
        if self.taus.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return fail(format!("tau values must lie in (0, 1), got {:?}", self.taus));
        }
        if self.degree < 2 {
            return fail(format!("degree must be at least 2, got {}", self.degree));
        }
        if matches!(self.intervals, Some(m) if m < 2) {
            return fail("intervals must be at least 2".into());
        }
        if !(self.xi > 1.0) {
            return fail(format!("xi must exceed 1, got {}", self.xi));
        }
        if self.lambda1 < 0.0 || self.eta < 0.0 {
            return fail("lambda1 and eta must be nonnegative".into());
        }
        if !(self.rho > 0.0 && self.conv_tol > 0.0) || self.zero_threshold < 0.0 {
            return fail("rho and conv_tol must be positive, zero_threshold nonnegative".into());
        }
        if self.methods.is_empty() {
            return fail("methods must not be empty".into());
        }
        if self.curve_points < 2 || self.kde_points < 2 {
            return fail("curve_points and kde_points must be at least 2".into());
        }
        Ok(())
    }

    pub fn intervals_or(&self, default: usize) -> usize {
        self.intervals.unwrap_or(default)
    }

    pub fn response_or(&self, default: &str) -> String {
        self.response.clone().unwrap_or_else(|| default.to_string())
    }
}

/// Key listing shown by `--help`.
pub fn key_help() -> String {
    let mut s = String::from("Configuration keys (key = default  # meaning):\n");
    for (k, d, doc) in KEYS {
        let _ = writeln!(s, "  {k} = {d}  # {doc}");
    }
    s
}
