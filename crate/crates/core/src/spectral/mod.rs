//! Chebyshev collocation for the two Bessel eigenvalue parameterizations,
//! comparing polynomial against rational (Bernstein denominator)
//! approximations of the non-constant coefficients.

pub mod bessel;

pub use bessel::{bessel_j, bessel_y, eigenvalue_ratio_error, reference_eigenvalues};

use crate::error::{Error, Result};
use crate::fitting::{
    self, fit_shared_denominator, polynomial_eval, polynomial_least_squares, Dataset, FitConfig,
};
use crate::linalg;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Chebyshev-Gauss-Lobatto nodes on [a, b] (ascending, endpoints included)
/// with dense first/second differentiation matrices.
#[derive(Debug, Clone)]
pub struct CollocationGrid {
    pub nodes: Vec<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    pub interval: [f64; 2],
}

/// Builds the grid and differentiation matrices. The diagonal uses the
/// negative-sum trick; `d2` is the matrix square of `d1`.
pub fn build_grid(n_points: usize, interval: [f64; 2]) -> Result<CollocationGrid> {
    if n_points < 4 {
        return Err(Error::Config("need at least 4 collocation points".into()));
    }
    let [a, b] = interval;
    if !(b > a) {
        return Err(Error::Config("interval must have positive length".into()));
    }
    let n = n_points;
    let nodes: Vec<f64> = (0..n)
        .map(|i| a + (b - a) * 0.5 * (1.0 - (PI * i as f64 / (n - 1) as f64).cos()))
        .collect();
    let delta = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let mut d1 = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let v = sign * delta(j) / (delta(i) * (nodes[i] - nodes[j]));
            d1[(i, j)] = v;
            diag -= v;
        }
        d1[(i, i)] = diag;
    }
    let d2 = &d1 * &d1;
    Ok(CollocationGrid { nodes, d1, d2, interval })
}

/// Generalized pencil `A y = lambda B y` with Dirichlet rows at both ends
/// (unit rows in `A`, zero rows in `B`).
#[derive(Debug, Clone)]
pub struct EigenProblem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

/// A non-constant coefficient sampled at the collocation nodes: either plain
/// values (exact or polynomial approximations) or a rational with separate
/// numerator/denominator values, the denominator shared across coefficients.
#[derive(Debug, Clone)]
pub enum CoefficientApprox {
    Values(Vec<f64>),
    Rational { numerator: Vec<f64>, denominator: Vec<f64> },
}

fn check_len(name: &str, values: &[f64], n: usize) -> Result<()> {
    if values.len() != n {
        return Err(Error::Mismatch(format!(
            "{name} has {} values for a {n}-node grid",
            values.len()
        )));
    }
    Ok(())
}

fn check_positive(q: &[f64]) -> Result<()> {
    for (i, &v) in q.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::Positivity { index: i, value: v });
        }
    }
    Ok(())
}

fn impose_dirichlet(a: &mut DMatrix<f64>, b: &mut DMatrix<f64>) {
    let n = a.nrows();
    for &row in &[0, n - 1] {
        for j in 0..n {
            a[(row, j)] = 0.0;
            b[(row, j)] = 0.0;
        }
        a[(row, row)] = 1.0;
    }
}

/// Single non-constant coefficient problem on [0, 1]:
/// `(lambda p(x) - m^2) y + (1/a^2) y'' = 0` with `p ~ e^{2 a x}`.
/// Rational mode clears the shared denominator:
/// `A = diag(q) ((1/a^2) D2 - m^2 I)`, `B = -diag(p_num)`.
pub fn assemble_bessel_single(
    coeff: &CoefficientApprox,
    a_param: f64,
    m_order: usize,
    grid: &CollocationGrid,
) -> Result<EigenProblem> {
    let n = grid.nodes.len();
    let inv_a2 = 1.0 / (a_param * a_param);
    let m2 = (m_order * m_order) as f64;
    let mut base = &grid.d2 * inv_a2;
    for i in 0..n {
        base[(i, i)] -= m2;
    }
    let (mut a, mut b) = match coeff {
        CoefficientApprox::Values(p) => {
            check_len("coefficient", p, n)?;
            let mut b = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                b[(i, i)] = -p[i];
            }
            (base, b)
        }
        CoefficientApprox::Rational { numerator, denominator } => {
            check_len("numerator", numerator, n)?;
            check_len("denominator", denominator, n)?;
            check_positive(denominator)?;
            for i in 0..n {
                let q = denominator[i];
                for j in 0..n {
                    base[(i, j)] *= q;
                }
            }
            let mut b = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                b[(i, i)] = -numerator[i];
            }
            (base, b)
        }
    };
    impose_dirichlet(&mut a, &mut b);
    Ok(EigenProblem { a, b })
}

/// Three coefficient approximations for the multiple-coefficient problem on
/// [0, ln2/a]: the y'' factor, the y' factor, and the
/// lambda-multiplying factor `(e^{a z} - 1)^2`. Rational mode shares one
/// denominator across all three.
#[derive(Debug, Clone)]
pub enum BesselCoefficients {
    Direct {
        second: Vec<f64>,
        first: Vec<f64>,
        lambda: Vec<f64>,
    },
    Rational {
        second: Vec<f64>,
        first: Vec<f64>,
        lambda: Vec<f64>,
        denominator: Vec<f64>,
    },
}

/// Multiple non-constant coefficient problem:
/// `(1/a^2)(1-e^{-az})^2 y'' + (1/a) e^{-az}(1-e^{-az}) y'
///  + (lambda (e^{az}-1)^2 - m^2) y = 0`.
/// `B` is minus the diagonal of the lambda-coefficient approximation; in
/// rational mode the constant `m^2` term picks up the shared denominator.
pub fn assemble_bessel_multiple(
    coeffs: &BesselCoefficients,
    m_order: usize,
    grid: &CollocationGrid,
) -> Result<EigenProblem> {
    let n = grid.nodes.len();
    let m2 = (m_order * m_order) as f64;
    let (mut a, mut b) = match coeffs {
        BesselCoefficients::Direct { second, first, lambda } => {
            check_len("second-order coefficient", second, n)?;
            check_len("first-order coefficient", first, n)?;
            check_len("lambda coefficient", lambda, n)?;
            let mut a = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = second[i] * grid.d2[(i, j)] + first[i] * grid.d1[(i, j)];
                }
                a[(i, i)] -= m2;
            }
            let mut b = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                b[(i, i)] = -lambda[i];
            }
            (a, b)
        }
        BesselCoefficients::Rational { second, first, lambda, denominator } => {
            check_len("second-order numerator", second, n)?;
            check_len("first-order numerator", first, n)?;
            check_len("lambda numerator", lambda, n)?;
            check_len("denominator", denominator, n)?;
            check_positive(denominator)?;
            let mut a = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = second[i] * grid.d2[(i, j)] + first[i] * grid.d1[(i, j)];
                }
                a[(i, i)] -= m2 * denominator[i];
            }
            let mut b = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                b[(i, i)] = -lambda[i];
            }
            (a, b)
        }
    };
    impose_dirichlet(&mut a, &mut b);
    Ok(EigenProblem { a, b })
}

/// Eigenvalues whose magnitude exceeds this are numerically infinite modes.
const EIGEN_MAGNITUDE_CAP: f64 = 1e10;
/// Relative imaginary part beyond which a mode counts as spurious/complex.
const EIGEN_IMAG_TOL: f64 = 1e-6;

/// Outcome of a pencil solve: the requested real eigenvalues plus the count
/// of modes flagged (and dropped) for a non-negligible imaginary part.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub values: Vec<f64>,
    pub complex_flagged: usize,
}

fn raw_real_eigenvalues(problem: &EigenProblem) -> Result<(Vec<f64>, usize)> {
    let raw = linalg::pencil_eigenvalues(&problem.a, &problem.b)?;
    let mut complex_flagged = 0;
    let mut real: Vec<f64> = Vec::new();
    for v in raw {
        if !v.re.is_finite() || !v.im.is_finite() || v.norm() > EIGEN_MAGNITUDE_CAP {
            continue;
        }
        if v.im.abs() > EIGEN_IMAG_TOL * v.re.abs().max(1.0) {
            complex_flagged += 1;
            continue;
        }
        real.push(v.re);
    }
    real.sort_by(f64::total_cmp);
    Ok((real, complex_flagged))
}

/// First `k` physical eigenvalues of the pencil, ascending by real part,
/// with infinite and complex-flagged modes filtered and each survivor
/// polished by inverse iteration on the original pencil.
pub fn solve_eigen(problem: &EigenProblem, k: usize) -> Result<EigenSolution> {
    let n = problem.a.nrows();
    if k + 2 > n {
        return Err(Error::Config(format!("requested {k} eigenvalues from a {n}-point pencil")));
    }
    let (real, complex_flagged) = raw_real_eigenvalues(problem)?;
    if real.len() < k {
        return Err(Error::Solver(format!(
            "only {} physical eigenvalues available, {k} requested",
            real.len()
        )));
    }
    let mut values: Vec<f64> = real[..k].to_vec();
    for v in values.iter_mut() {
        *v = refine_eigenvalue(problem, *v);
    }
    values.sort_by(f64::total_cmp);
    Ok(EigenSolution { values, complex_flagged })
}

/// Fixed-shift inverse iteration with a least-squares Rayleigh update. The
/// shift keeps a small relative offset so the LU solve stays well-behaved,
/// the start vector is dense in every mode, and a wandering result (pulled to
/// a neighboring eigenvalue) is rejected in favor of the unrefined value.
fn refine_eigenvalue(problem: &EigenProblem, lambda0: f64) -> f64 {
    let n = problem.a.nrows();
    let mut v = DVector::<f64>::from_fn(n, |i, _| ((i + 1) as f64 * 2.399963).sin());
    let norm0 = v.norm();
    v /= norm0;
    let shift = lambda0 * (1.0 + 3e-8) + 1e-12;
    let shifted = &problem.a - shift * &problem.b;
    let lu = shifted.lu();
    let mut lambda = lambda0;
    for _ in 0..3 {
        let rhs = &problem.b * &v;
        let Some(next) = lu.solve(&rhs) else {
            return lambda0;
        };
        let norm = next.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return lambda0;
        }
        v = next / norm;
        let av = &problem.a * &v;
        let bv = &problem.b * &v;
        let denom = bv.dot(&bv);
        if denom > 0.0 {
            let candidate = bv.dot(&av) / denom;
            if candidate.is_finite() {
                lambda = candidate;
            }
        }
    }
    if (lambda - lambda0).abs() > 1e-3 * (1.0 + lambda0.abs()) {
        return lambda0;
    }
    lambda
}

/// First `k` strictly positive physical eigenvalues (the spectra the Bessel
/// comparisons consume; sign-indefinite coefficient approximations can shed
/// spurious negative modes). Only the selected eigenvalues are polished.
pub fn solve_eigen_positive(problem: &EigenProblem, k: usize) -> Result<Vec<f64>> {
    let (real, _) = raw_real_eigenvalues(problem)?;
    let mut positive: Vec<f64> = real.into_iter().filter(|&v| v > 1e-12).collect();
    positive.sort_by(f64::total_cmp);
    if positive.len() < k {
        return Err(Error::Solver(format!(
            "only {} positive eigenvalues available, {k} requested",
            positive.len()
        )));
    }
    positive.truncate(k);
    for v in positive.iter_mut() {
        *v = refine_eigenvalue(problem, *v);
    }
    positive.sort_by(f64::total_cmp);
    Ok(positive)
}

/// Which Bessel parameterization a study row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralCase {
    Single,
    Multiple,
}

/// Coefficient-approximation flavor of a study row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffMode {
    Polynomial,
    Rational,
}

impl CoeffMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CoeffMode::Polynomial => "polynomial",
            CoeffMode::Rational => "rational",
        }
    }
}

/// One table row: coefficient count, mode, mean eigenvalue error, and the
/// discrete l2 coefficient-approximation error.
#[derive(Debug, Clone)]
pub struct SpectralRow {
    pub num_coefs: usize,
    pub mode: CoeffMode,
    pub eig_error: f64,
    pub approx_error: f64,
}

/// Samples per coefficient fit (uniform grid on the rescaled interval).
const COEFF_FIT_SAMPLES: usize = 1000;
/// Eigenvalues compared per row.
const EIGS_COMPARED: usize = 20;

fn fit_grid() -> Vec<f64> {
    (0..=COEFF_FIT_SAMPLES)
        .map(|i| i as f64 / COEFF_FIT_SAMPLES as f64)
        .collect()
}

fn discrete_l2(errors: impl Iterator<Item = f64>) -> f64 {
    errors.map(|e| e * e).sum::<f64>().sqrt()
}

/// Study configuration for the table runs.
#[derive(Debug, Clone)]
pub struct SpectralStudyConfig {
    pub case: SpectralCase,
    pub coefs: Vec<usize>,
    pub n_points: usize,
    pub a_param: f64,
    pub m_order: usize,
}

impl SpectralStudyConfig {
    pub fn new(case: SpectralCase, coefs: Vec<usize>) -> Self {
        let (a_param, m_order) = match case {
            SpectralCase::Single => (4.0, 2),
            SpectralCase::Multiple => (1.0, 2),
        };
        Self { case, coefs, n_points: 256, a_param, m_order }
    }
}

/// Runs the polynomial/rational comparison over the requested coefficient
/// counts, emitting one row per (n, mode) in input order.
pub fn run_spectral_study(config: &SpectralStudyConfig) -> Result<Vec<SpectralRow>> {
    let mut rows = Vec::new();
    for &n in &config.coefs {
        for mode in [CoeffMode::Polynomial, CoeffMode::Rational] {
            let row = match config.case {
                SpectralCase::Single => run_single_row(config, n, mode),
                SpectralCase::Multiple => run_multiple_row(config, n, mode),
            };
            match row {
                Ok(r) => rows.push(r),
                Err(_) => rows.push(SpectralRow {
                    num_coefs: n,
                    mode,
                    eig_error: f64::NAN,
                    approx_error: f64::NAN,
                }),
            }
        }
    }
    Ok(rows)
}

/// Fits one coefficient function on [0, 1]; returns its values on the
/// collocation nodes (rescaled) plus the shared-denominator values when
/// rational, and the discrete l2 error on the fitting grid.
struct FittedCoefficient {
    node_numerator: Vec<f64>,
    node_denominator: Option<Vec<f64>>,
    l2_error: f64,
}

fn rational_fit_config(n: usize) -> FitConfig {
    let mut cfg = FitConfig::new(n, n);
    cfg.smoothing = 0.0;
    cfg.hot_start = true;
    cfg.rel_tol = 1e-13;
    cfg
}

fn fit_single_coefficient(
    f: impl Fn(f64) -> f64,
    n: usize,
    mode: CoeffMode,
    node_u: &[f64],
) -> Result<FittedCoefficient> {
    let grid = fit_grid();
    let values: Vec<f64> = grid.iter().map(|&u| f(u)).collect();
    match mode {
        CoeffMode::Polynomial => {
            let data = Dataset::new(grid.clone(), values.clone(), None)?;
            let spec = crate::basis::JacobiSpec::chebyshev();
            let coeffs = polynomial_least_squares(&data, n, spec)?;
            let l2 = discrete_l2(
                grid.iter()
                    .zip(&values)
                    .map(|(&u, &y)| polynomial_eval(&coeffs, spec, u).unwrap_or(f64::NAN) - y),
            );
            let node_vals = node_u
                .iter()
                .map(|&u| polynomial_eval(&coeffs, spec, u))
                .collect::<Result<Vec<f64>>>()?;
            Ok(FittedCoefficient { node_numerator: node_vals, node_denominator: None, l2_error: l2 })
        }
        CoeffMode::Rational => {
            let data = Dataset::new(grid.clone(), values.clone(), None)?;
            let report = fitting::fit(&data, &rational_fit_config(n))?;
            let model = &report.model;
            let l2 = discrete_l2(
                grid.iter()
                    .zip(&values)
                    .map(|(&u, &y)| model.evaluate(u).unwrap_or(f64::NAN) - y),
            );
            let mut nums = Vec::with_capacity(node_u.len());
            let mut dens = Vec::with_capacity(node_u.len());
            for &u in node_u {
                nums.push(model.numerator_at(u)?);
                dens.push(model.denominator_at(u)?);
            }
            Ok(FittedCoefficient {
                node_numerator: nums,
                node_denominator: Some(dens),
                l2_error: l2,
            })
        }
    }
}

fn run_single_row(config: &SpectralStudyConfig, n: usize, mode: CoeffMode) -> Result<SpectralRow> {
    let a = config.a_param;
    let grid = build_grid(config.n_points, [0.0, 1.0])?;
    let node_u: Vec<f64> = grid.nodes.iter().map(|&x| x.clamp(0.0, 1.0)).collect();
    let fitted = fit_single_coefficient(|u| (2.0 * a * u).exp(), n, mode, &node_u)?;
    let coeff = match &fitted.node_denominator {
        None => CoefficientApprox::Values(fitted.node_numerator.clone()),
        Some(q) => CoefficientApprox::Rational {
            numerator: fitted.node_numerator.clone(),
            denominator: q.clone(),
        },
    };
    let problem = assemble_bessel_single(&coeff, a, config.m_order, &grid)?;
    let eigs = solve_eigen_positive(&problem, EIGS_COMPARED)?;
    let mut total = 0.0;
    let mut counted = 0usize;
    for &lambda in &eigs {
        if let Ok(err) = eigenvalue_ratio_error(lambda, a, config.m_order) {
            total += err;
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(Error::Evaluation("no eigenvalue ratio could be evaluated".into()));
    }
    Ok(SpectralRow {
        num_coefs: n,
        mode,
        eig_error: total / counted as f64,
        approx_error: fitted.l2_error,
    })
}

fn run_multiple_row(config: &SpectralStudyConfig, n: usize, mode: CoeffMode) -> Result<SpectralRow> {
    let a = config.a_param;
    let len = std::f64::consts::LN_2 / a;
    let grid = build_grid(config.n_points, [0.0, len])?;
    let node_u: Vec<f64> = grid.nodes.iter().map(|&z| (z / len).clamp(0.0, 1.0)).collect();

    let c_second = move |u: f64| {
        let z = len * u;
        (1.0 / (a * a)) * (1.0 - (-a * z).exp()).powi(2)
    };
    let c_first = move |u: f64| {
        let z = len * u;
        (1.0 / a) * (-a * z).exp() * (1.0 - (-a * z).exp())
    };
    let c_lambda = move |u: f64| {
        let z = len * u;
        ((a * z).exp() - 1.0).powi(2)
    };

    let (coeffs, approx_error) = match mode {
        CoeffMode::Polynomial => {
            let f2 = fit_single_coefficient(c_second, n, mode, &node_u)?;
            let f1 = fit_single_coefficient(c_first, n, mode, &node_u)?;
            let fl = fit_single_coefficient(c_lambda, n, mode, &node_u)?;
            let approx = (f2.l2_error + f1.l2_error + fl.l2_error) / 3.0;
            (
                BesselCoefficients::Direct {
                    second: f2.node_numerator,
                    first: f1.node_numerator,
                    lambda: fl.node_numerator,
                },
                approx,
            )
        }
        CoeffMode::Rational => {
            let grid_u = fit_grid();
            let datasets: Vec<Dataset> = [&c_second as &dyn Fn(f64) -> f64, &c_first, &c_lambda]
                .iter()
                .map(|f| {
                    Dataset::new(grid_u.clone(), grid_u.iter().map(|&u| f(u)).collect(), None)
                })
                .collect::<Result<_>>()?;
            let report = fit_shared_denominator(&datasets, &rational_fit_config(n))?;
            let spec = rational_fit_config(n).basis;
            let den_model = crate::rational::RationalModel::from_simplex(
                spec,
                vec![1.0],
                report.weights.clone(),
            );
            // l2 errors per target on the fitting grid.
            let mut l2s = [0.0f64; 3];
            for (t, data) in datasets.iter().enumerate() {
                let mut acc = 0.0;
                for (&u, &y) in data.points.iter().zip(&data.values) {
                    let den = den_model.denominator_at(u)?;
                    let num = fitting::polynomial_eval(&report.numerators[t], spec, u)?;
                    let r = num / den - y;
                    acc += r * r;
                }
                l2s[t] = acc.sqrt();
            }
            let approx = (l2s[0] + l2s[1] + l2s[2]) / 3.0;
            let mut node_vals: Vec<Vec<f64>> =
                (0..3).map(|_| Vec::with_capacity(node_u.len())).collect();
            let mut dens = Vec::with_capacity(node_u.len());
            for &u in &node_u {
                for (vals, coeffs) in node_vals.iter_mut().zip(&report.numerators) {
                    vals.push(fitting::polynomial_eval(coeffs, spec, u)?);
                }
                dens.push(den_model.denominator_at(u)?);
            }
            let lambda = node_vals.pop().unwrap();
            let first = node_vals.pop().unwrap();
            let second = node_vals.pop().unwrap();
            (
                BesselCoefficients::Rational { second, first, lambda, denominator: dens },
                approx,
            )
        }
    };

    let problem = assemble_bessel_multiple(&coeffs, config.m_order, &grid)?;
    let eigs = solve_eigen_positive(&problem, EIGS_COMPARED)?;
    let truth = reference_eigenvalues(config.m_order, EIGS_COMPARED)?;
    let eig_error = eigs
        .iter()
        .zip(&truth)
        .map(|(e, t)| (e - t).abs())
        .sum::<f64>()
        / EIGS_COMPARED as f64;
    Ok(SpectralRow { num_coefs: n, mode, eig_error, approx_error })
}
