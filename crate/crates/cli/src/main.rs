//! Command-line entry point: `fit` trains a single rational model from a CSV,
//! `benchmark` runs a convergence-study suite, `spectral` reproduces the
//! Bessel eigenvalue comparison tables.
//!
//! Exit codes: 0 success, 1 I/O or validation error, 2 fit did not converge
//! (outputs are still written).

use clap::{Parser, Subcommand};
use polefree::bench::{self, NoiseKind, StudyConfig, Suite};
use polefree::fitting::{self, Dataset, FitConfig, LossKind};
use polefree::multivariate::{self, MvDataset, MvFitConfig};
use polefree::spectral::{run_spectral_study, SpectralCase, SpectralStudyConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "polefree", version, about = "Pole-free rational function approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a rational model to CSV data with header `x,y` or `x,z,y`.
    Fit {
        /// Input CSV path.
        #[arg(long)]
        input: PathBuf,
        /// Numerator degree N (per axis for bivariate input).
        #[arg(long)]
        num_degree: usize,
        /// Denominator degree M (per axis for bivariate input).
        #[arg(long)]
        den_degree: usize,
        /// Residual kind: linearized | reweighted | nonlinear.
        #[arg(long, default_value = "nonlinear")]
        loss: String,
        /// Smoothing strength, or `cv:a,b,c` to cross-validate over a grid.
        #[arg(long, default_value = "0")]
        smoothing: String,
        /// Cross-validation fold count (used with `--smoothing cv:...`).
        #[arg(long, default_value_t = 5)]
        cv_folds: usize,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-10)]
        rel_tol: f64,
        /// Hot-start from the SK / linearized candidates: on | off.
        #[arg(long, default_value = "on")]
        hot_start: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Model JSON output path.
        #[arg(long)]
        output: PathBuf,
        /// Report JSON path (defaults to `<output>.report.json`).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a convergence-study suite and write its CSV report.
    Benchmark {
        /// aaa_comparison | nonconstant_noise | multivariate
        #[arg(long)]
        suite: String,
        /// Inclusive degree range `a..b`.
        #[arg(long)]
        n: String,
        /// Inclusive seed range `a..b`.
        #[arg(long)]
        seeds: String,
        /// none | const:SIGMA | linear:SIGMA0,SLOPE (default: suite noise).
        #[arg(long)]
        noise: Option<String>,
        /// Worker cap; 0 forces serial (overrides POLEFREE_THREADS).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Reproduce the Bessel eigenvalue comparison (single | multiple case).
    Spectral {
        /// single | multiple
        #[arg(long)]
        case: String,
        /// Inclusive coefficient-count range `a..b`.
        #[arg(long)]
        coefs: String,
        #[arg(long, default_value_t = 256)]
        points: usize,
        /// Problem parameter a (default 4 for single, 1 for multiple).
        #[arg(long)]
        a_param: Option<f64>,
        /// Bessel order m (default 2).
        #[arg(long)]
        m_order: Option<usize>,
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Fit {
            input,
            num_degree,
            den_degree,
            loss,
            smoothing,
            cv_folds,
            max_iters,
            rel_tol,
            hot_start,
            seed,
            output,
            report,
        } => cmd_fit(FitArgs {
            input,
            num_degree,
            den_degree,
            loss,
            smoothing,
            cv_folds,
            max_iters,
            rel_tol,
            hot_start,
            seed,
            output,
            report,
        }),
        Command::Benchmark { suite, n, seeds, noise, threads, output } => {
            cmd_benchmark(&suite, &n, &seeds, noise.as_deref(), threads, &output)
        }
        Command::Spectral { case, coefs, points, a_param, m_order, output } => {
            cmd_spectral(&case, &coefs, points, a_param, m_order, &output)
        }
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

type CliResult<T> = Result<T, String>;

/// Inclusive `a..b` integer range.
fn parse_range(text: &str) -> CliResult<Vec<u64>> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| format!("range must look like a..b, got {text}"))?;
    let lo: u64 = lo.trim().parse().map_err(|_| format!("bad range start {lo}"))?;
    let hi: u64 = hi.trim().parse().map_err(|_| format!("bad range end {hi}"))?;
    if hi < lo {
        return Err(format!("empty range {text}"));
    }
    Ok((lo..=hi).collect())
}

fn parse_loss(text: &str) -> CliResult<LossKind> {
    match text {
        "linearized" => Ok(LossKind::Linearized),
        "reweighted" => Ok(LossKind::Reweighted),
        "nonlinear" => Ok(LossKind::Nonlinear),
        other => Err(format!("unknown loss {other}")),
    }
}

fn parse_switch(text: &str) -> CliResult<bool> {
    match text {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        other => Err(format!("expected on/off, got {other}")),
    }
}

enum Smoothing {
    Fixed(f64),
    CrossValidate(Vec<f64>),
}

fn parse_smoothing(text: &str) -> CliResult<Smoothing> {
    if let Some(grid) = text.strip_prefix("cv:") {
        let values = grid
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad smoothing value {v}")))
            .collect::<CliResult<Vec<f64>>>()?;
        if values.is_empty() {
            return Err("empty cv smoothing grid".into());
        }
        return Ok(Smoothing::CrossValidate(values));
    }
    text.parse::<f64>()
        .map(Smoothing::Fixed)
        .map_err(|_| format!("bad smoothing {text}"))
}

fn parse_noise(text: &str) -> CliResult<NoiseKind> {
    if text == "none" {
        return Ok(NoiseKind::None);
    }
    if let Some(sigma) = text.strip_prefix("const:") {
        let s: f64 = sigma.parse().map_err(|_| format!("bad sigma {sigma}"))?;
        return Ok(NoiseKind::GaussianConst(s));
    }
    if let Some(rest) = text.strip_prefix("linear:") {
        let (s0, slope) = rest
            .split_once(',')
            .ok_or_else(|| format!("linear noise needs sigma0,slope, got {rest}"))?;
        let s0: f64 = s0.parse().map_err(|_| format!("bad sigma0 {s0}"))?;
        let slope: f64 = slope.parse().map_err(|_| format!("bad slope {slope}"))?;
        return Ok(NoiseKind::GaussianLinear(s0, slope));
    }
    Err(format!("unknown noise spec {text}"))
}

/// Writes bytes via a temp file in the same directory, then renames, so
/// failures never leave a partial output behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| format!("bad output path {}", path.display()))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes).map_err(|e| format!("writing {}: {e}", tmp.display()))?;
    std::fs::rename(&tmp, path).map_err(|e| format!("renaming to {}: {e}", path.display()))?;
    Ok(())
}

fn default_report_path(output: &Path) -> PathBuf {
    let mut name = output
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_else(|| "model".into());
    name.push(".report.json");
    output.with_file_name(name)
}

enum InputData {
    Univariate(Dataset),
    Bivariate(MvDataset),
}

fn read_input_csv(path: &Path) -> CliResult<InputData> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| format!("opening {}: {e}", path.display()))?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let bivariate = match cols.as_slice() {
        ["x", "y"] => false,
        ["x", "z", "y"] => true,
        other => return Err(format!("expected header x,y or x,z,y, got {other:?}")),
    };
    let mut points = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let parse = |i: usize| -> CliResult<f64> {
            record
                .get(i)
                .ok_or_else(|| "short row".to_string())?
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number in row: {e}"))
        };
        if bivariate {
            points.push(parse(0)?);
            points.push(parse(1)?);
            values.push(parse(2)?);
        } else {
            points.push(parse(0)?);
            values.push(parse(1)?);
        }
    }
    if bivariate {
        MvDataset::new(2, points, values, None)
            .map(InputData::Bivariate)
            .map_err(|e| e.to_string())
    } else {
        Dataset::new(points, values, None)
            .map(InputData::Univariate)
            .map_err(|e| e.to_string())
    }
}

struct FitArgs {
    input: PathBuf,
    num_degree: usize,
    den_degree: usize,
    loss: String,
    smoothing: String,
    cv_folds: usize,
    max_iters: usize,
    rel_tol: f64,
    hot_start: String,
    seed: u64,
    output: PathBuf,
    report: Option<PathBuf>,
}

fn cmd_fit(args: FitArgs) -> CliResult<u8> {
    let loss = parse_loss(&args.loss)?;
    let smoothing = parse_smoothing(&args.smoothing)?;
    let hot_start = parse_switch(&args.hot_start)?;
    let data = read_input_csv(&args.input)?;
    let report_path = args.report.clone().unwrap_or_else(|| default_report_path(&args.output));

    let base = |lambda: f64| {
        let mut c = FitConfig::new(args.num_degree, args.den_degree);
        c.loss = loss;
        c.smoothing = lambda;
        c.max_iters = args.max_iters;
        c.rel_tol = args.rel_tol;
        c.hot_start = hot_start;
        c.seed = args.seed;
        c
    };

    match data {
        InputData::Univariate(dataset) => {
            let config = match smoothing {
                Smoothing::Fixed(lambda) => base(lambda),
                Smoothing::CrossValidate(grid) => {
                    let candidates: Vec<FitConfig> = grid.iter().map(|&l| base(l)).collect();
                    let outcome =
                        fitting::cross_validate(&dataset, &candidates, args.cv_folds, args.seed)
                            .map_err(|e| e.to_string())?;
                    outcome.best
                }
            };
            let report = fitting::fit(&dataset, &config).map_err(|e| e.to_string())?;
            let rmse = fitting::model_rmse(&report.model, &dataset).map_err(|e| e.to_string())?;
            let model_json =
                serde_json::to_string_pretty(&report.model).map_err(|e| e.to_string())?;
            write_atomic(&args.output, model_json.as_bytes())?;
            let report_json = serde_json::json!({
                "rmse": rmse,
                "loss": report.final_loss,
                "iterations": report.iterations,
                "pole_audit": report.pole_audit,
                "converged": report.converged,
                "hot_start_source": report.hot_start_source,
            });
            write_atomic(
                &report_path,
                serde_json::to_string_pretty(&report_json).map_err(|e| e.to_string())?.as_bytes(),
            )?;
            Ok(if report.converged { 0 } else { 2 })
        }
        InputData::Bivariate(dataset) => {
            let mv_base = |lambda: f64| {
                let mut c = MvFitConfig::uniform(2, args.num_degree);
                c.den_degrees = vec![args.den_degree; 2];
                c.loss = loss;
                c.smoothing = lambda;
                c.max_iters = args.max_iters;
                c.rel_tol = args.rel_tol;
                c.hot_start = hot_start;
                c.seed = args.seed;
                c
            };
            let config = match smoothing {
                Smoothing::Fixed(lambda) => mv_base(lambda),
                Smoothing::CrossValidate(grid) => {
                    let candidates: Vec<MvFitConfig> = grid.iter().map(|&l| mv_base(l)).collect();
                    let (best, _) =
                        multivariate::mv_cross_validate(&dataset, &candidates, args.cv_folds, args.seed)
                            .map_err(|e| e.to_string())?;
                    best
                }
            };
            let report = multivariate::mv_fit(&dataset, &config).map_err(|e| e.to_string())?;
            let rmse =
                multivariate::mv_model_rmse(&report.model, &dataset).map_err(|e| e.to_string())?;
            let model_json =
                serde_json::to_string_pretty(&report.model).map_err(|e| e.to_string())?;
            write_atomic(&args.output, model_json.as_bytes())?;
            let report_json = serde_json::json!({
                "rmse": rmse,
                "loss": report.final_loss,
                "iterations": report.iterations,
                "pole_audit": {
                    "has_pole_in_interval": corner_zero(&report.model),
                    "pole_locations": [],
                    "removable": [],
                    "method": "bernstein_certificate",
                },
                "converged": report.converged,
                "hot_start_source": report.hot_start_source,
            });
            write_atomic(
                &report_path,
                serde_json::to_string_pretty(&report_json).map_err(|e| e.to_string())?.as_bytes(),
            )?;
            Ok(if report.converged { 0 } else { 2 })
        }
    }
}

fn corner_zero(model: &multivariate::TensorRationalModel) -> bool {
    let shape = &model.den_shape;
    let w = model.denominator.as_slice();
    for mask in 0..(1usize << shape.len()) {
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

fn cmd_benchmark(
    suite: &str,
    n: &str,
    seeds: &str,
    noise: Option<&str>,
    threads: Option<usize>,
    output: &Path,
) -> CliResult<u8> {
    let suite = Suite::parse(suite).map_err(|e| e.to_string())?;
    let n_range: Vec<usize> = parse_range(n)?.into_iter().map(|v| v as usize).collect();
    let seeds = parse_range(seeds)?;
    let mut config = StudyConfig::new(suite, n_range, seeds);
    if let Some(spec) = noise {
        config.noise = parse_noise(spec)?;
    }
    config.threads = threads;
    let report = bench::run_convergence_study(&config).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    bench::write_csv(&report, &mut buf).map_err(|e| e.to_string())?;
    write_atomic(output, &buf)?;
    Ok(0)
}

fn cmd_spectral(
    case: &str,
    coefs: &str,
    points: usize,
    a_param: Option<f64>,
    m_order: Option<usize>,
    output: &Path,
) -> CliResult<u8> {
    let case = match case {
        "single" => SpectralCase::Single,
        "multiple" => SpectralCase::Multiple,
        other => return Err(format!("unknown case {other} (expected single or multiple)")),
    };
    let coefs: Vec<usize> = parse_range(coefs)?.into_iter().map(|v| v as usize).collect();
    let mut config = SpectralStudyConfig::new(case, coefs);
    config.n_points = points;
    if let Some(a) = a_param {
        config.a_param = a;
    }
    if let Some(m) = m_order {
        config.m_order = m;
    }
    let rows = run_spectral_study(&config).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    bench::write_spectral_csv(&rows, &mut buf).map_err(|e| e.to_string())?;
    write_atomic(output, &buf)?;
    Ok(0)
}
