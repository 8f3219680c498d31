//! Experiment harness: dataset generators for the function suites, metrics,
//! and convergence-study runners producing deterministic CSV reports.

use crate::baselines::{self, barycentric_eval};
use crate::error::{Error, Result};
use crate::fitting::{self, Dataset, FitConfig, LossKind};
use crate::multivariate::{self, MvDataset, MvFitConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use std::io::Write;

/// Additive Gaussian noise: none, constant sigma, or sigma growing linearly
/// in x (`sigma_0 + slope * x`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    None,
    GaussianConst(f64),
    GaussianLinear(f64, f64),
}

impl NoiseKind {
    fn sigma_at(&self, x: f64) -> f64 {
        match *self {
            NoiseKind::None => 0.0,
            NoiseKind::GaussianConst(s) => s,
            NoiseKind::GaussianLinear(s0, slope) => s0 + slope * x,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseKind::None)
    }
}

/// Noise specification with its own seed, independent of the sampling seed.
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self { kind: NoiseKind::None, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            NoiseKind::None => true,
            NoiseKind::GaussianConst(s) => s >= 0.0,
            NoiseKind::GaussianLinear(s0, slope) => s0 >= 0.0 && s0 + slope >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config("noise sigma must stay nonnegative on [0, 1]".into()))
        }
    }
}

/// How sample locations are drawn.
#[derive(Debug, Clone, Copy)]
pub enum Sampling {
    /// `i / n` for i = 0..=n (per axis for bivariate functions).
    UniformGrid(usize),
    /// `count` points uniform in the (hyper)cube from the given seed.
    UniformRandom(usize, u64),
}

/// The experiment function registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FunctionId {
    F1,
    F2,
    F3,
    G1,
    G2,
    G3,
}

impl FunctionId {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "F1" | "f1" => Ok(Self::F1),
            "F2" | "f2" => Ok(Self::F2),
            "F3" | "f3" => Ok(Self::F3),
            "G1" | "g1" => Ok(Self::G1),
            "G2" | "g2" => Ok(Self::G2),
            "G3" | "g3" => Ok(Self::G3),
            other => Err(Error::Config(format!("unknown function id {other}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::F1 => "F1",
            Self::F2 => "F2",
            Self::F3 => "F3",
            Self::G1 => "G1",
            Self::G2 => "G2",
            Self::G3 => "G3",
        }
    }

    pub fn is_bivariate(self) -> bool {
        matches!(self, Self::G1 | Self::G2 | Self::G3)
    }

    pub fn eval1(self, x: f64) -> f64 {
        match self {
            Self::F1 => (50.0 * (x - 0.5)).atan(),
            Self::F2 => (2.0 * (x - 0.5)).abs(),
            Self::F3 => (-x).exp() * (16.0 * x * x).sin(),
            _ => f64::NAN,
        }
    }

    pub fn eval2(self, x: f64, z: f64) -> f64 {
        match self {
            Self::G1 => ((4.0 * (x - 0.5)).powi(2) + (4.0 * (z - 0.5)).powi(2)).sin(),
            Self::G2 => (8.0 * x * x).sin() * (8.0 * z * z).sin(),
            Self::G3 => (4.0 * (x - 0.5)).exp() * (4.0 * (z - 0.5)).sin(),
            _ => f64::NAN,
        }
    }
}

/// Generated samples, univariate or bivariate depending on the function.
#[derive(Debug, Clone)]
pub enum GeneratedDataset {
    Univariate(Dataset),
    Bivariate(MvDataset),
}

/// Draws a dataset for a registry function: deterministic given the sampling
/// and noise seeds.
pub fn generate_dataset(
    id: FunctionId,
    sampling: Sampling,
    noise: NoiseModel,
) -> Result<GeneratedDataset> {
    noise.validate()?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut perturb = |x: f64, y: f64| -> Result<f64> {
        match noise.kind {
            NoiseKind::None => Ok(y),
            _ => {
                let sigma = noise.kind.sigma_at(x);
                if sigma == 0.0 {
                    return Ok(y);
                }
                let dist = Normal::new(0.0, sigma)
                    .map_err(|e| Error::Config(format!("bad noise sigma: {e}")))?;
                Ok(y + dist.sample(&mut noise_rng))
            }
        }
    };

    if id.is_bivariate() {
        let mut points = Vec::new();
        let mut values = Vec::new();
        match sampling {
            Sampling::UniformGrid(n) => {
                for j in 0..=n {
                    for k in 0..=n {
                        let x = j as f64 / n as f64;
                        let z = k as f64 / n as f64;
                        points.push(x);
                        points.push(z);
                        values.push(perturb(x, id.eval2(x, z))?);
                    }
                }
            }
            Sampling::UniformRandom(count, seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..count {
                    let x: f64 = rng.random_range(0.0..1.0);
                    let z: f64 = rng.random_range(0.0..1.0);
                    points.push(x);
                    points.push(z);
                    values.push(perturb(x, id.eval2(x, z))?);
                }
            }
        }
        Ok(GeneratedDataset::Bivariate(MvDataset::new(2, points, values, None)?))
    } else {
        let (points, values) = match sampling {
            Sampling::UniformGrid(n) => {
                let points: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
                let values = points
                    .iter()
                    .map(|&x| perturb(x, id.eval1(x)))
                    .collect::<Result<Vec<f64>>>()?;
                (points, values)
            }
            Sampling::UniformRandom(count, seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let points: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..1.0)).collect();
                let values = points
                    .iter()
                    .map(|&x| perturb(x, id.eval1(x)))
                    .collect::<Result<Vec<f64>>>()?;
                (points, values)
            }
        };
        Ok(GeneratedDataset::Univariate(Dataset::new(points, values, None)?))
    }
}

/// Root mean squared error between predictions and ground truth.
pub fn rmse(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != truth.len() {
        return Err(Error::Mismatch("rmse needs equal-length nonempty inputs".into()));
    }
    let acc: f64 = predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((acc / predictions.len() as f64).sqrt())
}

/// The experiment suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    AaaComparison,
    NonconstantNoise,
    Multivariate,
}

impl Suite {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "aaa_comparison" => Ok(Self::AaaComparison),
            "nonconstant_noise" => Ok(Self::NonconstantNoise),
            "multivariate" => Ok(Self::Multivariate),
            other => Err(Error::Config(format!("unknown suite {other}"))),
        }
    }

    /// The noise model each suite uses unless overridden.
    pub fn default_noise(self) -> NoiseKind {
        match self {
            Suite::AaaComparison => NoiseKind::GaussianConst(0.01),
            Suite::NonconstantNoise => NoiseKind::GaussianLinear(0.01, 0.1),
            Suite::Multivariate => NoiseKind::GaussianConst(0.1),
        }
    }

    fn functions(self) -> &'static [FunctionId] {
        match self {
            Suite::Multivariate => &[FunctionId::G1, FunctionId::G2, FunctionId::G3],
            _ => &[FunctionId::F1, FunctionId::F2, FunctionId::F3],
        }
    }

    fn methods(self) -> &'static [&'static str] {
        match self {
            Suite::AaaComparison => &["aaa", "bernstein", "polynomial"],
            Suite::NonconstantNoise => &["bernstein", "polynomial"],
            Suite::Multivariate => &["bernstein"],
        }
    }
}

/// Study controls; `threads` of Some(0) forces serial execution, None defers
/// to the `POLEFREE_THREADS` environment variable (or all cores).
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub suite: Suite,
    pub n_range: Vec<usize>,
    pub seeds: Vec<u64>,
    pub noise: NoiseKind,
    pub threads: Option<usize>,
}

impl StudyConfig {
    pub fn new(suite: Suite, n_range: Vec<usize>, seeds: Vec<u64>) -> Self {
        Self { suite, n_range, seeds, noise: suite.default_noise(), threads: None }
    }
}

/// One study row; `rmse` is None when the method failed on this task.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub function: String,
    pub method: String,
    pub n: usize,
    pub seed: u64,
    pub rmse: Option<f64>,
    pub has_pole: bool,
    pub error: Option<String>,
}

/// Sorted rows of a convergence study.
#[derive(Debug, Clone)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
}

/// Splittable-mix constant decorrelating the noise stream from the sampling
/// stream of the same seed.
const NOISE_SEED_SALT: u64 = 0xD1B5_4A32_D192_ED03;

fn effective_threads(requested: Option<usize>) -> Option<usize> {
    match requested {
        Some(k) => Some(k),
        None => std::env::var("POLEFREE_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok()),
    }
}

/// Runs every (function, method, n, seed) combination of the suite; per-row
/// failures are recorded in the row, never aborting the study. Rows are
/// sorted by (function, method, n, seed) regardless of execution order.
pub fn run_convergence_study(config: &StudyConfig) -> Result<StudyReport> {
    if config.n_range.is_empty() {
        return Err(Error::Config("empty degree range".into()));
    }
    if config.seeds.is_empty() {
        return Err(Error::Config("empty seed list".into()));
    }
    let mut tasks = Vec::new();
    for &f in config.suite.functions() {
        for method in config.suite.methods() {
            for &n in &config.n_range {
                for &seed in &config.seeds {
                    tasks.push((f, *method, n, seed));
                }
            }
        }
    }

    let noise = config.noise;
    let run = |&(f, method, n, seed): &(FunctionId, &str, usize, u64)| -> StudyRow {
        run_task(f, method, n, seed, noise)
    };

    let mut rows: Vec<StudyRow> = match effective_threads(config.threads) {
        Some(0) | Some(1) => tasks.iter().map(run).collect(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| tasks.par_iter().map(run).collect()),
        None => tasks.par_iter().map(run).collect(),
    };
    rows.sort_by(|a, b| {
        (&a.function, &a.method, a.n, a.seed).cmp(&(&b.function, &b.method, b.n, b.seed))
    });
    Ok(StudyReport { rows })
}

fn run_task(f: FunctionId, method: &str, n: usize, seed: u64, noise: NoiseKind) -> StudyRow {
    let outcome = match std::panic::catch_unwind(|| task_inner(f, method, n, seed, noise)) {
        Ok(inner) => inner,
        Err(_) => Err(Error::Evaluation("panic during fit".into())),
    };
    match outcome {
        Ok((rmse, has_pole)) => StudyRow {
            function: f.as_str().into(),
            method: method.into(),
            n,
            seed,
            rmse: Some(rmse),
            has_pole,
            error: None,
        },
        Err(e) => StudyRow {
            function: f.as_str().into(),
            method: method.into(),
            n,
            seed,
            rmse: None,
            has_pole: false,
            error: Some(e.to_string()),
        },
    }
}

fn noise_model(noise: NoiseKind, seed: u64) -> NoiseModel {
    NoiseModel { kind: noise, seed: seed ^ NOISE_SEED_SALT }
}

fn task_inner(
    f: FunctionId,
    method: &str,
    n: usize,
    seed: u64,
    noise: NoiseKind,
) -> Result<(f64, bool)> {
    if f.is_bivariate() {
        return mv_task(f, method, n, seed, noise);
    }
    let sampling = if noise.is_none() {
        Sampling::UniformGrid(1000)
    } else {
        Sampling::UniformRandom(1000, seed)
    };
    let GeneratedDataset::Univariate(data) =
        generate_dataset(f, sampling, noise_model(noise, seed))?
    else {
        unreachable!("univariate id produced bivariate data");
    };
    let truth: Vec<f64> = data.points.iter().map(|&x| f.eval1(x)).collect();

    match method {
        "polynomial" => {
            let spec = crate::basis::JacobiSpec::chebyshev();
            let coeffs = fitting::polynomial_least_squares(&data, 2 * n, spec)?;
            let preds = data
                .points
                .iter()
                .map(|&x| fitting::polynomial_eval(&coeffs, spec, x))
                .collect::<Result<Vec<f64>>>()?;
            Ok((rmse(&preds, &truth)?, false))
        }
        "aaa" => {
            let model = baselines::aaa_fit(&data.points, &data.values, n + 1, 1e-13)?;
            let preds = data
                .points
                .iter()
                .map(|&x| barycentric_eval(&model, x))
                .collect::<Result<Vec<f64>>>()?;
            let has_pole = !baselines::real_poles_in_unit_interval(&model)?.is_empty();
            Ok((rmse(&preds, &truth)?, has_pole))
        }
        "bernstein" => {
            let mut cfg = FitConfig::new(n, n);
            cfg.loss = LossKind::Nonlinear;
            cfg.smoothing = 0.0;
            cfg.hot_start = noise.is_none();
            cfg.seed = seed;
            let report = fitting::fit(&data, &cfg)?;
            let preds = data
                .points
                .iter()
                .map(|&x| report.model.evaluate(x))
                .collect::<Result<Vec<f64>>>()?;
            Ok((rmse(&preds, &truth)?, report.pole_audit.has_pole_in_interval))
        }
        other => Err(Error::Config(format!("unknown method {other}"))),
    }
}

/// Smoothing grid searched per bivariate fit.
const MV_LAMBDA_GRID: [f64; 4] = [0.0, 1e-9, 1e-6, 1e-3];
const MV_CV_FOLDS: usize = 3;
/// Iteration budget for fold fits (candidate ranking only).
const MV_CV_ITERS: usize = 80;

fn mv_task(
    f: FunctionId,
    method: &str,
    n: usize,
    seed: u64,
    noise: NoiseKind,
) -> Result<(f64, bool)> {
    if method != "bernstein" {
        return Err(Error::Config(format!("unknown bivariate method {method}")));
    }
    let sampling = if noise.is_none() {
        Sampling::UniformGrid(50)
    } else {
        Sampling::UniformRandom(1000, seed)
    };
    let GeneratedDataset::Bivariate(data) =
        generate_dataset(f, sampling, noise_model(noise, seed))?
    else {
        unreachable!("bivariate id produced univariate data");
    };
    let truth: Vec<f64> = (0..data.len())
        .map(|i| {
            let p = data.point(i);
            f.eval2(p[0], p[1])
        })
        .collect();

    let candidates: Vec<MvFitConfig> = MV_LAMBDA_GRID
        .iter()
        .map(|&lam| {
            let mut c = MvFitConfig::uniform(2, n);
            c.smoothing = lam;
            c.max_iters = MV_CV_ITERS;
            c.hot_start = noise.is_none();
            c.seed = seed;
            c
        })
        .collect();
    let (mut best, _) = multivariate::mv_cross_validate(&data, &candidates, MV_CV_FOLDS, seed)?;
    best.max_iters = 500;
    let report = multivariate::mv_fit(&data, &best)?;
    let preds = (0..data.len())
        .map(|i| report.model.evaluate(data.point(i)))
        .collect::<Result<Vec<f64>>>()?;
    let has_pole = corner_weights_vanish(&report.model);
    Ok((rmse(&preds, &truth)?, has_pole))
}

/// A tensor denominator vanishes inside the closed cube only at a corner
/// whose weight is zero.
fn corner_weights_vanish(model: &multivariate::TensorRationalModel) -> bool {
    let shape = &model.den_shape;
    let w = model.denominator.as_slice();
    let corners = 1usize << shape.len();
    for mask in 0..corners {
        let mut flat = 0usize;
        for (d, &len) in shape.iter().enumerate() {
            flat = flat * len + if mask >> d & 1 == 1 { len - 1 } else { 0 };
        }
        if w[flat] <= 0.0 {
            return true;
        }
    }
    false
}

/// Writes the report as CSV with 17-significant-digit floats:
/// `function,method,n,seed,rmse,has_pole,error`.
pub fn write_csv<W: Write>(report: &StudyReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["function", "method", "n", "seed", "rmse", "has_pole", "error"])?;
    for row in &report.rows {
        w.write_record([
            row.function.as_str(),
            row.method.as_str(),
            &row.n.to_string(),
            &row.seed.to_string(),
            &row.rmse.map(|v| format!("{v:.16e}")).unwrap_or_default(),
            if row.has_pole { "true" } else { "false" },
            row.error.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Spectral-table CSV: `num_coefs,mode,eig_error,approx_error`.
pub fn write_spectral_csv<W: Write>(
    rows: &[crate::spectral::SpectralRow],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["num_coefs", "mode", "eig_error", "approx_error"])?;
    for row in rows {
        w.write_record([
            row.num_coefs.to_string(),
            row.mode.as_str().to_string(),
            format!("{:.16e}", row.eig_error),
            format!("{:.16e}", row.approx_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_dataset_hits_kink_exactly() {
        let GeneratedDataset::Univariate(d) =
            generate_dataset(FunctionId::F2, Sampling::UniformGrid(1000), NoiseModel::none())
                .unwrap()
        else {
            panic!("expected univariate");
        };
        assert_eq!(d.len(), 1001);
        assert_eq!(d.values[500], 0.0);
    }

    #[test]
    fn bivariate_grid_center_is_zero() {
        let GeneratedDataset::Bivariate(d) =
            generate_dataset(FunctionId::G3, Sampling::UniformGrid(50), NoiseModel::none())
                .unwrap()
        else {
            panic!("expected bivariate");
        };
        assert_eq!(d.len(), 51 * 51);
        // (0.5, 0.5) sits at index 25*51 + 25.
        assert_abs_diff_eq!(d.values[25 * 51 + 25], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn noisy_generation_is_deterministic() {
        let noise = NoiseModel { kind: NoiseKind::GaussianConst(0.01), seed: 7 };
        let a = generate_dataset(FunctionId::F1, Sampling::UniformRandom(1000, 7), noise).unwrap();
        let b = generate_dataset(FunctionId::F1, Sampling::UniformRandom(1000, 7), noise).unwrap();
        let (GeneratedDataset::Univariate(a), GeneratedDataset::Univariate(b)) = (a, b) else {
            panic!("expected univariate");
        };
        assert_eq!(a.points, b.points);
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn rmse_basics() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        // Constant offset c gives |c|.
        assert_abs_diff_eq!(rmse(&[1.5, 2.5], &[1.0, 2.0]).unwrap(), 0.5, epsilon = 1e-15);
        // Differences (3, 4): sqrt((9 + 16) / 2).
        assert_abs_diff_eq!(
            rmse(&[3.0, 0.0], &[0.0, 4.0]).unwrap(),
            (25.0f64 / 2.0).sqrt(),
            epsilon = 1e-12
        );
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn linear_noise_decile_statistics() {
        let noise = NoiseModel { kind: NoiseKind::GaussianLinear(0.01, 0.1), seed: 3 };
        let GeneratedDataset::Univariate(d) =
            generate_dataset(FunctionId::F1, Sampling::UniformRandom(100_000, 5), noise).unwrap()
        else {
            panic!("expected univariate");
        };
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); 10];
        for (x, y) in d.points.iter().zip(&d.values) {
            let residual = y - FunctionId::F1.eval1(*x);
            let bucket = ((x * 10.0) as usize).min(9);
            buckets[bucket].push(residual);
        }
        for (b, residuals) in buckets.iter().enumerate() {
            let mid = (b as f64 + 0.5) / 10.0;
            let expect = 0.01 + mid / 10.0;
            let var: f64 = residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64;
            let std = var.sqrt();
            assert!(
                (std - expect).abs() < 0.1 * expect,
                "decile {b}: std {std} vs {expect}"
            );
        }
    }

    #[test]
    fn study_row_cardinality_and_determinism() {
        let mut config = StudyConfig::new(Suite::NonconstantNoise, vec![2], vec![1, 2]);
        config.threads = Some(0);
        let a = run_convergence_study(&config).unwrap();
        // 3 functions x 2 methods x 1 degree x 2 seeds.
        assert_eq!(a.rows.len(), 12);
        let b = run_convergence_study(&config).unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        write_csv(&a, &mut buf_a).unwrap();
        write_csv(&b, &mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
        let text = String::from_utf8(buf_a).unwrap();
        assert!(text.starts_with("function,method,n,seed,rmse,has_pole,error"));
    }

    #[test]
    fn unknown_suite_and_function_are_rejected() {
        assert!(Suite::parse("nope").is_err());
        assert!(FunctionId::parse("F9").is_err());
    }

    #[test]
    fn bernstein_rows_are_pole_free_smoke() {
        let mut config = StudyConfig::new(Suite::AaaComparison, vec![3], vec![1]);
        config.threads = Some(0);
        let report = run_convergence_study(&config).unwrap();
        for row in report.rows.iter().filter(|r| r.method == "bernstein") {
            assert!(row.error.is_none(), "{:?}", row.error);
            assert!(!row.has_pole);
        }
    }
}
