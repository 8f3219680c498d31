//! Residual objectives, the Sobolev-Jacobi smoothing penalty, the
//! simplex-constrained iterative optimizer with hot-start, the SK baseline,
//! and k-fold cross-validation.

use crate::basis::{self, JacobiSpec, MonomialCoeffs};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rational::{audit_model, PoleAudit, RationalModel, SimplexWeights};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Sample points in [0, 1] with target values and optional positive
/// quadrature weights (uniform `1/len` when omitted).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub quad_weights: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(points: Vec<f64>, values: Vec<f64>, quad_weights: Option<Vec<f64>>) -> Result<Self> {
        if points.is_empty() || points.len() != values.len() {
            return Err(Error::Mismatch(format!(
                "points ({}) and values ({}) must be equal-length and nonempty",
                points.len(),
                values.len()
            )));
        }
        if let Some(w) = &quad_weights {
            if w.len() != points.len() {
                return Err(Error::Mismatch("quadrature weights length mismatch".into()));
            }
            if w.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Domain("quadrature weights must be positive".into()));
            }
        }
        if points.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Domain("sample points must lie in [0, 1]".into()));
        }
        Ok(Self { points, values, quad_weights })
    }

    /// Noiseless samples of `f` on the uniform grid `{i/n}`, i = 0..=n.
    pub fn from_grid(n: usize, f: impl Fn(f64) -> f64) -> Self {
        let points: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let values = points.iter().map(|&x| f(x)).collect();
        Self { points, values, quad_weights: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weights_vec(&self) -> Vec<f64> {
        match &self.quad_weights {
            Some(w) => w.clone(),
            None => vec![1.0 / self.len() as f64; self.len()],
        }
    }
}

/// Which residual the optimizer minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Linearized,
    Reweighted,
    Nonlinear,
}

/// Fit controls: degrees, loss, smoothing strength, iteration limits,
/// hot-start switch, and the RNG seed used by cross-validation.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub num_degree: usize,
    pub den_degree: usize,
    pub loss: LossKind,
    pub smoothing: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub hot_start: bool,
    pub seed: u64,
    pub basis: JacobiSpec,
}

impl FitConfig {
    pub fn new(num_degree: usize, den_degree: usize) -> Self {
        Self {
            num_degree,
            den_degree,
            loss: LossKind::Nonlinear,
            smoothing: 0.0,
            max_iters: 500,
            rel_tol: 1e-10,
            hot_start: true,
            seed: 0,
            basis: JacobiSpec::chebyshev(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(Error::Config("smoothing must be finite and >= 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.smoothing > 0.0 && self.num_degree > MAX_PENALTY_DEGREE {
            return Err(Error::PenaltyOverflow { degree: self.num_degree });
        }
        Ok(())
    }
}

/// Which candidate seeded the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HotStartSource {
    Sk,
    Linearized,
    Uniform,
}

/// Fitted model plus convergence diagnostics and a pole audit.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub model: RationalModel,
    pub final_loss: f64,
    pub loss_trajectory: Vec<f64>,
    pub iterations: usize,
    pub hot_start_source: HotStartSource,
    pub pole_audit: PoleAudit,
    pub converged: bool,
}

/// n^n exceeds the f64 range near n = 143; stay comfortably below.
pub const MAX_PENALTY_DEGREE: usize = 120;

/// Per-coefficient penalty weights `n^n` with the convention `0^0 = 1`.
pub fn penalty_weights(num_degree: usize) -> Result<Vec<f64>> {
    if num_degree > MAX_PENALTY_DEGREE {
        return Err(Error::PenaltyOverflow { degree: num_degree });
    }
    Ok((0..=num_degree)
        .map(|n| if n == 0 { 1.0 } else { (n as f64).powi(n as i32) })
        .collect())
}

/// Smoothing penalty `sum a_n^2 n^n` on numerator spectral coefficients.
pub fn sobolev_jacobi_penalty(a: &[f64]) -> Result<f64> {
    let weights = penalty_weights(a.len().saturating_sub(1))?;
    Ok(a.iter().zip(&weights).map(|(c, p)| c * c * p).sum())
}

/// Precomputed per-sample basis evaluations shared by all objective pieces.
struct DesignCache {
    y: Vec<f64>,
    mu: Vec<f64>,
    bern: DMatrix<f64>,
    jac: DMatrix<f64>,
    penalty: Vec<f64>,
    lambda: f64,
}

impl DesignCache {
    fn build(
        dataset: &Dataset,
        num_degree: usize,
        den_degree: usize,
        lambda: f64,
        spec: JacobiSpec,
    ) -> Result<Self> {
        let rows = dataset.len();
        let mut bern = DMatrix::<f64>::zeros(rows, den_degree + 1);
        let mut jac = DMatrix::<f64>::zeros(rows, num_degree + 1);
        for (i, &x) in dataset.points.iter().enumerate() {
            let b = basis::eval_bernstein_basis(den_degree, x)?;
            for (m, v) in b.iter().enumerate() {
                bern[(i, m)] = *v;
            }
            let p = basis::eval_jacobi_basis(spec, num_degree, x)?;
            for (n, v) in p.iter().enumerate() {
                jac[(i, n)] = *v;
            }
        }
        Ok(Self {
            y: dataset.values.clone(),
            mu: dataset.weights_vec(),
            bern,
            jac,
            penalty: penalty_weights(num_degree)?,
            lambda,
        })
    }

    fn den_values(&self, w: &[f64]) -> Vec<f64> {
        let wv = DVector::from_column_slice(w);
        (&self.bern * wv).as_slice().to_vec()
    }

    fn num_values(&self, a: &[f64]) -> Vec<f64> {
        let av = DVector::from_column_slice(a);
        (&self.jac * av).as_slice().to_vec()
    }

    fn penalty_value(&self, a: &[f64]) -> f64 {
        self.lambda
            * a.iter()
                .zip(&self.penalty)
                .map(|(c, p)| c * c * p)
                .sum::<f64>()
    }

    /// Weighted ridge least squares: minimizes
    /// `sum s_i (y_i D_i - N(x_i))^2 + lambda sum pen_n a_n^2`
    /// through an SVD (minimum-norm on rank deficiency).
    fn solve_numerator_weighted(&self, den: &[f64], row_scale: &[f64]) -> Result<Vec<f64>> {
        let rows = self.y.len();
        let cols = self.jac.ncols();
        let mut a = DMatrix::<f64>::zeros(rows + cols, cols);
        let mut b = DVector::<f64>::zeros(rows + cols);
        for i in 0..rows {
            let s = row_scale[i].sqrt();
            for n in 0..cols {
                a[(i, n)] = s * self.jac[(i, n)];
            }
            b[i] = s * self.y[i] * den[i];
        }
        if self.lambda > 0.0 {
            for n in 0..cols {
                a[(rows + n, n)] = (self.lambda * self.penalty[n]).sqrt();
            }
        }
        let sol = linalg::lstsq_min_norm(&a, &b)?;
        Ok(sol.as_slice().to_vec())
    }
}

/// Objective with a rebase hook for measures that track the previous iterate.
/// Shared by the univariate, multivariate, and shared-denominator fits.
pub(crate) trait SimplexObjective {
    type Coeffs: Clone;
    /// Called at the start of every outer iteration with the current weights.
    fn rebase(&mut self, _w: &[f64]) {}
    fn loss(&self, a: &Self::Coeffs, w: &[f64]) -> Result<f64>;
    fn grad_w(&self, a: &Self::Coeffs, w: &[f64]) -> Result<Vec<f64>>;
    fn solve_coeffs(&self, w: &[f64]) -> Result<Self::Coeffs>;
}

struct UniObjective<'a> {
    cache: &'a DesignCache,
    kind: LossKind,
    prev_w: Option<Vec<f64>>,
}

impl<'a> UniObjective<'a> {
    fn new(cache: &'a DesignCache, kind: LossKind) -> Self {
        Self { cache, kind, prev_w: None }
    }

    /// Per-sample measure for the linear-in-`a` normal form
    /// `sum s_i (y_i D_i - N_i)^2`.
    fn row_scale(&self, den: &[f64]) -> Result<Vec<f64>> {
        let c = self.cache;
        match self.kind {
            LossKind::Linearized => Ok(c.mu.clone()),
            LossKind::Nonlinear => den
                .iter()
                .zip(&c.mu)
                .enumerate()
                .map(|(i, (&d, &mu))| {
                    if d == 0.0 {
                        Err(Error::Pole { x: i as f64 })
                    } else {
                        Ok(mu / (d * d))
                    }
                })
                .collect(),
            LossKind::Reweighted => {
                let prev = self
                    .prev_w
                    .as_ref()
                    .ok_or_else(|| Error::Config("reweighted loss lacks a previous iterate".into()))?;
                let dprev = c.den_values(prev);
                dprev
                    .iter()
                    .zip(&c.mu)
                    .map(|(&d, &mu)| {
                        if d == 0.0 {
                            Err(Error::Divergence("previous denominator vanishes at a sample".into()))
                        } else {
                            Ok(mu / (d * d))
                        }
                    })
                    .collect()
            }
        }
    }
}

impl SimplexObjective for UniObjective<'_> {
    type Coeffs = Vec<f64>;

    fn rebase(&mut self, w: &[f64]) {
        if self.kind == LossKind::Reweighted {
            self.prev_w = Some(w.to_vec());
        }
    }

    fn loss(&self, a: &Vec<f64>, w: &[f64]) -> Result<f64> {
        let c = self.cache;
        let den = c.den_values(w);
        let num = c.num_values(a);
        let base = match self.kind {
            LossKind::Nonlinear => {
                let mut acc = 0.0;
                for i in 0..c.y.len() {
                    if den[i] == 0.0 {
                        return Err(Error::Pole { x: f64::NAN });
                    }
                    let r = c.y[i] - num[i] / den[i];
                    acc += c.mu[i] * r * r;
                }
                acc
            }
            _ => {
                let scale = self.row_scale(&den)?;
                let mut acc = 0.0;
                for i in 0..c.y.len() {
                    let r = c.y[i] * den[i] - num[i];
                    acc += scale[i] * r * r;
                }
                acc
            }
        };
        Ok(base + c.penalty_value(a))
    }

    fn grad_w(&self, a: &Vec<f64>, w: &[f64]) -> Result<Vec<f64>> {
        let c = self.cache;
        let den = c.den_values(w);
        let num = c.num_values(a);
        let m = c.bern.ncols();
        let mut grad = vec![0.0; m];
        match self.kind {
            LossKind::Nonlinear => {
                for i in 0..c.y.len() {
                    if den[i] == 0.0 {
                        return Err(Error::Pole { x: f64::NAN });
                    }
                    let d2 = den[i] * den[i];
                    let coeff = 2.0 * c.mu[i] * (c.y[i] - num[i] / den[i]) * num[i] / d2;
                    for (j, g) in grad.iter_mut().enumerate() {
                        *g += coeff * c.bern[(i, j)];
                    }
                }
            }
            _ => {
                let scale = self.row_scale(&den)?;
                for i in 0..c.y.len() {
                    let coeff = 2.0 * scale[i] * (c.y[i] * den[i] - num[i]) * c.y[i];
                    for (j, g) in grad.iter_mut().enumerate() {
                        *g += coeff * c.bern[(i, j)];
                    }
                }
            }
        }
        Ok(grad)
    }

    fn solve_coeffs(&self, w: &[f64]) -> Result<Vec<f64>> {
        let den = self.cache.den_values(w);
        let scale = self.row_scale(&den)?;
        self.cache.solve_numerator_weighted(&den, &scale)
    }
}

/// Step cap: `eta_max^{-1} = max_i(grad_i - w . grad)`, infinite (capped at 1)
/// when the centered gradient has no positive component.
pub fn eta_max(w: &SimplexWeights, grad: &[f64]) -> f64 {
    let wg: f64 = w.as_slice().iter().zip(grad).map(|(a, b)| a * b).sum();
    let max_c = grad.iter().map(|g| g - wg).fold(f64::NEG_INFINITY, f64::max);
    if max_c > 0.0 {
        1.0 / max_c
    } else {
        1.0
    }
}

/// Multiplicative simplex update `w' = w (1 - eta (grad - w.grad))`; preserves
/// the simplex for `0 < eta <= eta_max`.
pub fn simplex_step(w: &SimplexWeights, grad: &[f64], eta: f64) -> Result<SimplexWeights> {
    if grad.len() != w.as_slice().len() {
        return Err(Error::Mismatch("gradient length != weight length".into()));
    }
    let cap = eta_max(w, grad);
    if !(eta > 0.0) || eta > cap {
        return Err(Error::Step { eta, eta_max: cap });
    }
    let wg: f64 = w.as_slice().iter().zip(grad).map(|(a, b)| a * b).sum();
    let updated: Vec<f64> = w
        .as_slice()
        .iter()
        .zip(grad)
        .map(|(&wi, &gi)| wi * (1.0 - eta * (gi - wg)))
        .collect();
    Ok(SimplexWeights::from_raw_unchecked(updated))
}

fn raw_step(w: &[f64], centered: &[f64], eta: f64) -> Vec<f64> {
    w.iter()
        .zip(centered)
        .map(|(&wi, &ci)| (wi * (1.0 - eta * ci)).max(0.0))
        .collect()
}

pub(crate) struct IterationOutcome<C> {
    pub(crate) coeffs: C,
    pub(crate) weights: Vec<f64>,
    pub(crate) trajectory: Vec<f64>,
    pub(crate) iterations: usize,
    pub(crate) converged: bool,
}

const MAX_HALVINGS: usize = 30;

/// One weight step with backtracking from `0.9 eta_max` followed by the exact
/// coefficient solve, repeated until the relative loss change drops below
/// `rel_tol` or the iteration budget runs out.
pub(crate) fn run_simplex_iteration<O: SimplexObjective>(
    obj: &mut O,
    w0: Vec<f64>,
    max_iters: usize,
    rel_tol: f64,
) -> Result<IterationOutcome<O::Coeffs>> {
    let mut w = w0;
    obj.rebase(&w);
    let mut coeffs = obj.solve_coeffs(&w)?;
    let mut trajectory = vec![obj.loss(&coeffs, &w)?];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iters {
        iterations += 1;
        obj.rebase(&w);
        let loss_ref = obj.loss(&coeffs, &w)?;
        let grad = obj.grad_w(&coeffs, &w)?;
        let wg: f64 = w.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let centered: Vec<f64> = grad.iter().map(|g| g - wg).collect();
        let max_c = centered.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let cap = if max_c > 0.0 { 1.0 / max_c } else { 1.0 };

        let mut eta = 0.9 * cap;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = raw_step(&w, &centered, eta);
            match obj.loss(&coeffs, &trial) {
                Ok(l) if l < loss_ref => {
                    w = trial;
                    accepted = true;
                    break;
                }
                _ => eta *= 0.5,
            }
        }
        if !accepted {
            // No pure-weight move helps once the coefficients are near their
            // conditional optimum; accept on the profile loss (coefficients
            // re-solved per trial) instead.
            eta = 0.9 * cap;
            for _ in 0..=MAX_HALVINGS {
                let trial = raw_step(&w, &centered, eta);
                let profile = obj
                    .solve_coeffs(&trial)
                    .and_then(|a| obj.loss(&a, &trial));
                match profile {
                    Ok(l) if l < loss_ref => {
                        w = trial;
                        accepted = true;
                        break;
                    }
                    _ => eta *= 0.5,
                }
            }
        }
        if accepted {
            let sum: f64 = w.iter().sum();
            for v in &mut w {
                *v /= sum;
            }
        }

        coeffs = obj.solve_coeffs(&w)?;
        let new_loss = obj.loss(&coeffs, &w)?;
        trajectory.push(new_loss);
        if (loss_ref - new_loss).abs() <= rel_tol * loss_ref.abs() {
            converged = true;
            break;
        }
    }

    Ok(IterationOutcome { coeffs, weights: w, trajectory, iterations, converged })
}

/// Linearized-loss exact numerator solve for fixed weights: weighted ridge
/// least squares with the diagonal `lambda n^n` penalty.
pub fn solve_numerator(
    w: &SimplexWeights,
    dataset: &Dataset,
    lambda: f64,
    spec: JacobiSpec,
) -> Result<Vec<f64>> {
    solve_numerator_degree(w, dataset, lambda, spec, usize::MAX)
}

/// As `solve_numerator` with an explicit numerator degree (defaults to the
/// denominator-matched degree when `usize::MAX`).
pub fn solve_numerator_degree(
    w: &SimplexWeights,
    dataset: &Dataset,
    lambda: f64,
    spec: JacobiSpec,
    num_degree: usize,
) -> Result<Vec<f64>> {
    let n = if num_degree == usize::MAX { w.degree() } else { num_degree };
    let cache = DesignCache::build(dataset, n, w.degree(), lambda, spec)?;
    let den = cache.den_values(w.as_slice());
    let scale = cache.mu.clone();
    cache.solve_numerator_weighted(&den, &scale)
}

/// Public residual objectives (cache-free convenience wrappers). The weights
/// are taken in ambient coordinates: the formulas are defined for any `w`,
/// which is what finite-difference derivative checks need; keeping `w` on the
/// simplex is the optimizer's job.
pub fn linearized_loss(
    a: &[f64],
    w: &[f64],
    dataset: &Dataset,
    lambda: f64,
    spec: JacobiSpec,
) -> Result<f64> {
    let cache = DesignCache::build(dataset, a.len() - 1, w.len() - 1, lambda, spec)?;
    UniObjective::new(&cache, LossKind::Linearized).loss(&a.to_vec(), w)
}

pub fn nonlinear_loss(
    a: &[f64],
    w: &[f64],
    dataset: &Dataset,
    lambda: f64,
    spec: JacobiSpec,
) -> Result<f64> {
    let cache = DesignCache::build(dataset, a.len() - 1, w.len() - 1, lambda, spec)?;
    UniObjective::new(&cache, LossKind::Nonlinear).loss(&a.to_vec(), w)
}

pub fn reweighted_loss(
    a: &[f64],
    w: &[f64],
    dataset: &Dataset,
    lambda: f64,
    prev_w: &[f64],
    spec: JacobiSpec,
) -> Result<f64> {
    let cache = DesignCache::build(dataset, a.len() - 1, w.len() - 1, lambda, spec)?;
    let mut obj = UniObjective::new(&cache, LossKind::Reweighted);
    obj.prev_w = Some(prev_w.to_vec());
    obj.loss(&a.to_vec(), w)
}

/// Analytic gradient of the nonlinear loss in the denominator weights.
pub fn grad_w_nonlinear(
    a: &[f64],
    w: &[f64],
    dataset: &Dataset,
    lambda: f64,
    spec: JacobiSpec,
) -> Result<Vec<f64>> {
    let cache = DesignCache::build(dataset, a.len() - 1, w.len() - 1, lambda, spec)?;
    UniObjective::new(&cache, LossKind::Nonlinear).grad_w(&a.to_vec(), w)
}

/// SK iteration count / stagnation controls.
const SK_DEFAULT_ITERS: usize = 20;
const SK_STALL_TOL: f64 = 1e-12;

/// Classic SK iteration in the monomial basis with the `b_0 = 1`
/// normalization: repeated reweighted linear least squares, each solved by
/// SVD. Returns the final (numerator, denominator) iterate.
pub fn sk_fit(
    dataset: &Dataset,
    num_degree: usize,
    den_degree: usize,
    iters: usize,
) -> Result<(MonomialCoeffs, MonomialCoeffs)> {
    let rows = dataset.len();
    let unknowns = num_degree + den_degree + 1;
    if rows < unknowns {
        return Err(Error::Config(format!(
            "SK needs at least {unknowns} samples, got {rows}"
        )));
    }
    // Vandermonde powers once.
    let mut powers = DMatrix::<f64>::zeros(rows, num_degree.max(den_degree) + 1);
    for (i, &x) in dataset.points.iter().enumerate() {
        let mut p = 1.0;
        for j in 0..powers.ncols() {
            powers[(i, j)] = p;
            p *= x;
        }
    }

    let mut q_prev = vec![1.0; rows];
    let mut num = vec![0.0; num_degree + 1];
    let mut den = vec![0.0; den_degree + 1];
    den[0] = 1.0;

    for _ in 0..iters.max(1) {
        let mut a = DMatrix::<f64>::zeros(rows, unknowns);
        let mut b = DVector::<f64>::zeros(rows);
        for i in 0..rows {
            let qp = q_prev[i];
            if qp == 0.0 {
                return Err(Error::Divergence(
                    "SK reweighting denominator vanishes at a sample".into(),
                ));
            }
            for n in 0..=num_degree {
                a[(i, n)] = powers[(i, n)] / qp;
            }
            for m in 1..=den_degree {
                a[(i, num_degree + m)] = -dataset.values[i] * powers[(i, m)] / qp;
            }
            b[i] = dataset.values[i] / qp;
        }
        let sol = linalg::lstsq_min_norm(&a, &b)?;
        let new_num: Vec<f64> = sol.as_slice()[..=num_degree].to_vec();
        let mut new_den = vec![1.0];
        new_den.extend_from_slice(&sol.as_slice()[num_degree + 1..]);

        let change = num
            .iter()
            .chain(&den)
            .zip(new_num.iter().chain(&new_den))
            .map(|(old, new)| (old - new).abs())
            .fold(0.0f64, f64::max);
        let scale = new_num
            .iter()
            .chain(&new_den)
            .map(|c| c.abs())
            .fold(1.0f64, f64::max);
        num = new_num;
        den = new_den;
        for i in 0..rows {
            q_prev[i] = (0..=den_degree).map(|m| den[m] * powers[(i, m)]).sum();
        }
        if change <= SK_STALL_TOL * scale {
            break;
        }
    }
    Ok((MonomialCoeffs(num), MonomialCoeffs(den)))
}

/// Converts a monomial rational pair into a simplex-constrained model:
/// the denominator goes through the Bernstein conversion with negative
/// coefficients clamped to zero, the shared normalization constant rescales
/// the numerator, and the numerator is re-expressed in the configured basis.
pub fn project_to_simplex_model(
    num: &MonomialCoeffs,
    den: &MonomialCoeffs,
    spec: JacobiSpec,
) -> Result<RationalModel> {
    let bern = basis::monomial_to_bernstein(den);
    let clamped: Vec<f64> = bern.0.iter().map(|&b| b.max(0.0)).collect();
    if clamped.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Degenerate(
            "all Bernstein denominator coefficients clamp to zero".into(),
        ));
    }
    let n = num.degree();
    // Re-express the monomial numerator in the Jacobi basis by collocation
    // on n + 1 Chebyshev-Gauss-Lobatto nodes (exact for polynomials).
    let nodes: Vec<f64> = if n == 0 {
        vec![0.5]
    } else {
        (0..=n)
            .map(|j| 0.5 * (1.0 - (std::f64::consts::PI * j as f64 / n as f64).cos()))
            .collect()
    };
    let mut v = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut rhs = DVector::<f64>::zeros(n + 1);
    for (i, &x) in nodes.iter().enumerate() {
        let p = basis::eval_jacobi_basis(spec, n, x)?;
        for (k, val) in p.iter().enumerate() {
            v[(i, k)] = *val;
        }
        rhs[i] = num.eval(x);
    }
    let coeffs: Vec<f64> = linalg::lstsq_min_norm(&v, &rhs)?.as_slice().to_vec();
    RationalModel::new(spec, coeffs, clamped)
}

/// Endpoint weights below this are treated as zero when screening hot-start
/// candidates for boundary poles.
const ENDPOINT_ZERO_TOL: f64 = 1e-12;

fn endpoint_free(w: &[f64]) -> bool {
    w[0] > ENDPOINT_ZERO_TOL && w[w.len() - 1] > ENDPOINT_ZERO_TOL
}

/// Full Bernstein-denominator fit: optional hot-start from the better of the
/// projected SK and linearized candidates, then the iterative scheme on the
/// configured residuals. Non-convergence is reported, not an error.
pub fn fit(dataset: &Dataset, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Degenerate("empty dataset".into()));
    }
    let cache = DesignCache::build(
        dataset,
        config.num_degree,
        config.den_degree,
        config.smoothing,
        config.basis,
    )?;
    let mut obj = UniObjective::new(&cache, config.loss);

    let uniform = SimplexWeights::uniform(config.den_degree);
    let mut start = uniform.as_slice().to_vec();
    let mut source = HotStartSource::Uniform;

    if config.hot_start {
        let mut best: Option<(HotStartSource, Vec<f64>, f64)> = None;
        let mut consider = |src: HotStartSource, w: Vec<f64>, obj: &mut UniObjective| {
            if !endpoint_free(&w) {
                return;
            }
            obj.rebase(&w);
            let score = match obj.solve_coeffs(&w).and_then(|a| obj.loss(&a, &w)) {
                Ok(s) => s,
                Err(_) => return,
            };
            if best.as_ref().is_none_or(|(_, _, s)| score < *s) {
                best = Some((src, w, score));
            }
        };

        if let Ok((num, den)) = sk_fit(dataset, config.num_degree, config.den_degree, SK_DEFAULT_ITERS) {
            if let Ok(model) = project_to_simplex_model(&num, &den, config.basis) {
                consider(HotStartSource::Sk, model.denominator.as_slice().to_vec(), &mut obj);
            }
        }

        {
            let mut lin_obj = UniObjective::new(&cache, LossKind::Linearized);
            if let Ok(out) = run_simplex_iteration(
                &mut lin_obj,
                uniform.as_slice().to_vec(),
                config.max_iters,
                config.rel_tol,
            ) {
                consider(HotStartSource::Linearized, out.weights, &mut obj);
            }
        }

        if let Some((src, w, _)) = best {
            start = w;
            source = src;
        }
    }

    let outcome = run_simplex_iteration(&mut obj, start, config.max_iters, config.rel_tol)?;
    let model = RationalModel::new(config.basis, outcome.coeffs, outcome.weights)?;
    let pole_audit = audit_model(&model);
    Ok(FitReport {
        final_loss: *outcome.trajectory.last().unwrap(),
        loss_trajectory: outcome.trajectory,
        iterations: outcome.iterations,
        hot_start_source: source,
        pole_audit,
        converged: outcome.converged,
        model,
    })
}

/// Joint fit of several target functions sharing one denominator.
#[derive(Debug, Clone)]
pub struct SharedFitReport {
    pub numerators: Vec<Vec<f64>>,
    pub weights: SimplexWeights,
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub hot_start_source: HotStartSource,
}

struct SharedObjective<'a> {
    caches: &'a [DesignCache],
    kind: LossKind,
    prev_w: Option<Vec<f64>>,
}

impl SimplexObjective for SharedObjective<'_> {
    type Coeffs = Vec<Vec<f64>>;

    fn rebase(&mut self, w: &[f64]) {
        if self.kind == LossKind::Reweighted {
            self.prev_w = Some(w.to_vec());
        }
    }

    fn loss(&self, a: &Vec<Vec<f64>>, w: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (cache, coeffs) in self.caches.iter().zip(a) {
            let mut obj = UniObjective::new(cache, self.kind);
            obj.prev_w = self.prev_w.clone();
            total += obj.loss(coeffs, w)?;
        }
        Ok(total)
    }

    fn grad_w(&self, a: &Vec<Vec<f64>>, w: &[f64]) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; w.len()];
        for (cache, coeffs) in self.caches.iter().zip(a) {
            let mut obj = UniObjective::new(cache, self.kind);
            obj.prev_w = self.prev_w.clone();
            for (g, gi) in grad.iter_mut().zip(obj.grad_w(coeffs, w)?) {
                *g += gi;
            }
        }
        Ok(grad)
    }

    fn solve_coeffs(&self, w: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.caches
            .iter()
            .map(|cache| {
                let mut obj = UniObjective::new(cache, self.kind);
                obj.prev_w = self.prev_w.clone();
                obj.solve_coeffs(w)
            })
            .collect()
    }
}

/// SK iteration for several targets with one shared denominator: the
/// least-squares blocks stack per target with block-diagonal numerator
/// unknowns and common `b` columns.
pub fn sk_fit_shared(
    datasets: &[Dataset],
    num_degree: usize,
    den_degree: usize,
    iters: usize,
) -> Result<(Vec<MonomialCoeffs>, MonomialCoeffs)> {
    if datasets.is_empty() {
        return Err(Error::Config("no target datasets".into()));
    }
    let k = datasets.len();
    let rows_total: usize = datasets.iter().map(|d| d.len()).sum();
    let unknowns = k * (num_degree + 1) + den_degree;
    if rows_total < unknowns {
        return Err(Error::Config(format!(
            "shared SK needs at least {unknowns} samples, got {rows_total}"
        )));
    }

    let max_pow = num_degree.max(den_degree);
    let powers: Vec<DMatrix<f64>> = datasets
        .iter()
        .map(|d| {
            let mut p = DMatrix::<f64>::zeros(d.len(), max_pow + 1);
            for (i, &x) in d.points.iter().enumerate() {
                let mut v = 1.0;
                for j in 0..=max_pow {
                    p[(i, j)] = v;
                    v *= x;
                }
            }
            p
        })
        .collect();

    let mut den = vec![0.0; den_degree + 1];
    den[0] = 1.0;
    let mut nums = vec![vec![0.0; num_degree + 1]; k];
    let mut q_prev: Vec<Vec<f64>> = datasets.iter().map(|d| vec![1.0; d.len()]).collect();

    for _ in 0..iters.max(1) {
        let mut a = DMatrix::<f64>::zeros(rows_total, unknowns);
        let mut b = DVector::<f64>::zeros(rows_total);
        let mut row = 0;
        for (t, data) in datasets.iter().enumerate() {
            for i in 0..data.len() {
                let qp = q_prev[t][i];
                if qp == 0.0 {
                    return Err(Error::Divergence(
                        "shared SK reweighting denominator vanishes at a sample".into(),
                    ));
                }
                for n in 0..=num_degree {
                    a[(row, t * (num_degree + 1) + n)] = powers[t][(i, n)] / qp;
                }
                for m in 1..=den_degree {
                    a[(row, k * (num_degree + 1) + m - 1)] =
                        -data.values[i] * powers[t][(i, m)] / qp;
                }
                b[row] = data.values[i] / qp;
                row += 1;
            }
        }
        let sol = linalg::lstsq_min_norm(&a, &b)?;
        for (t, num) in nums.iter_mut().enumerate() {
            num.copy_from_slice(&sol.as_slice()[t * (num_degree + 1)..(t + 1) * (num_degree + 1)]);
        }
        let mut new_den = vec![1.0];
        new_den.extend_from_slice(&sol.as_slice()[k * (num_degree + 1)..]);
        let change = den
            .iter()
            .zip(&new_den)
            .map(|(o, n)| (o - n).abs())
            .fold(0.0f64, f64::max);
        den = new_den;
        for (t, data) in datasets.iter().enumerate() {
            for i in 0..data.len() {
                q_prev[t][i] = (0..=den_degree).map(|m| den[m] * powers[t][(i, m)]).sum();
            }
        }
        if change <= SK_STALL_TOL {
            break;
        }
    }
    Ok((
        nums.into_iter().map(MonomialCoeffs).collect(),
        MonomialCoeffs(den),
    ))
}

/// Fits several targets with one simplex-constrained denominator by the same
/// iterative scheme; hot-start candidates come from the shared SK projection
/// and the joint linearized fit.
pub fn fit_shared_denominator(datasets: &[Dataset], config: &FitConfig) -> Result<SharedFitReport> {
    config.validate()?;
    if datasets.is_empty() || datasets.iter().any(|d| d.is_empty()) {
        return Err(Error::Degenerate("empty dataset".into()));
    }
    let caches: Vec<DesignCache> = datasets
        .iter()
        .map(|d| {
            DesignCache::build(d, config.num_degree, config.den_degree, config.smoothing, config.basis)
        })
        .collect::<Result<_>>()?;
    let mut obj = SharedObjective { caches: &caches, kind: config.loss, prev_w: None };

    let uniform = SimplexWeights::uniform(config.den_degree);
    let mut start = uniform.as_slice().to_vec();
    let mut source = HotStartSource::Uniform;

    if config.hot_start {
        let mut best: Option<(HotStartSource, Vec<f64>, f64)> = None;
        let mut consider = |src: HotStartSource, w: Vec<f64>, obj: &mut SharedObjective| {
            if !endpoint_free(&w) {
                return;
            }
            obj.rebase(&w);
            let score = match obj.solve_coeffs(&w).and_then(|a| obj.loss(&a, &w)) {
                Ok(s) => s,
                Err(_) => return,
            };
            if best.as_ref().is_none_or(|(_, _, s)| score < *s) {
                best = Some((src, w, score));
            }
        };

        if let Ok((_, den)) = sk_fit_shared(datasets, config.num_degree, config.den_degree, SK_DEFAULT_ITERS)
        {
            let bern = basis::monomial_to_bernstein(&den);
            let clamped: Vec<f64> = bern.0.iter().map(|&v| v.max(0.0)).collect();
            let total: f64 = clamped.iter().sum();
            if total > 0.0 {
                consider(
                    HotStartSource::Sk,
                    clamped.iter().map(|v| v / total).collect(),
                    &mut obj,
                );
            }
        }

        {
            let mut lin = SharedObjective { caches: &caches, kind: LossKind::Linearized, prev_w: None };
            if let Ok(out) = run_simplex_iteration(
                &mut lin,
                uniform.as_slice().to_vec(),
                config.max_iters,
                config.rel_tol,
            ) {
                consider(HotStartSource::Linearized, out.weights, &mut obj);
            }
        }

        if let Some((src, w, _)) = best {
            start = w;
            source = src;
        }
    }

    let outcome = run_simplex_iteration(&mut obj, start, config.max_iters, config.rel_tol)?;
    Ok(SharedFitReport {
        numerators: outcome.coeffs,
        weights: SimplexWeights::new(outcome.weights)?,
        final_loss: *outcome.trajectory.last().unwrap(),
        iterations: outcome.iterations,
        converged: outcome.converged,
        hot_start_source: source,
    })
}

/// Penalty-free polynomial least squares in the given spectral basis; the
/// baseline every comparison runs against. Returns basis coefficients.
pub fn polynomial_least_squares(
    dataset: &Dataset,
    degree: usize,
    spec: JacobiSpec,
) -> Result<Vec<f64>> {
    let w = SimplexWeights::uniform(0);
    solve_numerator_degree(&w, dataset, 0.0, spec, degree)
}

/// Evaluates a polynomial given by spectral-basis coefficients.
pub fn polynomial_eval(coeffs: &[f64], spec: JacobiSpec, x: f64) -> Result<f64> {
    let p = basis::eval_jacobi_basis(spec, coeffs.len() - 1, x)?;
    Ok(coeffs.iter().zip(&p).map(|(c, v)| c * v).sum())
}

/// Root-mean-square prediction error of a fitted model on a dataset.
pub fn model_rmse(model: &RationalModel, dataset: &Dataset) -> Result<f64> {
    let mut acc = 0.0;
    for (x, y) in dataset.points.iter().zip(&dataset.values) {
        let p = model.evaluate(*x)?;
        acc += (p - y) * (p - y);
    }
    Ok((acc / dataset.len() as f64).sqrt())
}

/// Per-config cross-validation scores plus the selected config.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub best: FitConfig,
    pub scores: Vec<f64>,
}

/// Deterministic shuffled k-fold cross-validation scored by mean held-out
/// nonlinear RMSE; ties break toward smaller smoothing, then smaller
/// numerator degree.
pub fn cross_validate(
    dataset: &Dataset,
    configs: &[FitConfig],
    k: usize,
    seed: u64,
) -> Result<CvOutcome> {
    if configs.is_empty() {
        return Err(Error::Config("no candidate configs".into()));
    }
    if k < 2 {
        return Err(Error::Config("cross-validation needs k >= 2".into()));
    }
    if dataset.len() < k {
        return Err(Error::Config("dataset smaller than fold count".into()));
    }
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let folds: Vec<Vec<usize>> = (0..k)
        .map(|f| indices.iter().copied().skip(f).step_by(k).collect())
        .collect();

    let mut scores = Vec::with_capacity(configs.len());
    for config in configs {
        let mut fold_rmse = Vec::with_capacity(k);
        for fold in &folds {
            let in_fold: std::collections::HashSet<usize> = fold.iter().copied().collect();
            let (mut tx, mut ty, mut vx, mut vy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for i in 0..dataset.len() {
                if in_fold.contains(&i) {
                    vx.push(dataset.points[i]);
                    vy.push(dataset.values[i]);
                } else {
                    tx.push(dataset.points[i]);
                    ty.push(dataset.values[i]);
                }
            }
            let train = Dataset::new(tx, ty, None)?;
            let rmse = match fit(&train, config) {
                Ok(report) => {
                    let mut acc = 0.0;
                    let mut ok = true;
                    for (x, y) in vx.iter().zip(&vy) {
                        match report.model.evaluate(*x) {
                            Ok(p) => acc += (p - y) * (p - y),
                            Err(_) => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        (acc / vx.len() as f64).sqrt()
                    } else {
                        f64::INFINITY
                    }
                }
                Err(_) => f64::INFINITY,
            };
            fold_rmse.push(rmse);
        }
        scores.push(fold_rmse.iter().sum::<f64>() / k as f64);
    }

    let mut best_idx = 0;
    for i in 1..configs.len() {
        let better = match scores[i].partial_cmp(&scores[best_idx]) {
            Some(std::cmp::Ordering::Less) => true,
            Some(std::cmp::Ordering::Equal) => {
                let (ci, cb) = (&configs[i], &configs[best_idx]);
                ci.smoothing < cb.smoothing
                    || (ci.smoothing == cb.smoothing && ci.num_degree < cb.num_degree)
            }
            _ => false,
        };
        if better {
            best_idx = i;
        }
    }
    Ok(CvOutcome { best: configs[best_idx].clone(), scores })
}
