//! Tensor-product rational models on the unit hypercube with one joint
//! simplex constraint over the flattened denominator weights.

use crate::basis::{self, JacobiSpec};
use crate::error::{Error, Result};
use crate::fitting::{
    penalty_weights, run_simplex_iteration, FitConfig, HotStartSource, LossKind, SimplexObjective,
    MAX_PENALTY_DEGREE,
};
use crate::linalg;
use crate::rational::SimplexWeights;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Scattered samples in `[0, 1]^dim`; points stored row-major per sample.
#[derive(Debug, Clone)]
pub struct MvDataset {
    pub dim: usize,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub quad_weights: Option<Vec<f64>>,
}

impl MvDataset {
    pub fn new(dim: usize, points: Vec<f64>, values: Vec<f64>, quad_weights: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if values.is_empty() || points.len() != dim * values.len() {
            return Err(Error::Mismatch(format!(
                "expected {} coordinates for {} samples, got {}",
                dim * values.len(),
                values.len(),
                points.len()
            )));
        }
        if points.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Domain("sample points must lie in the unit hypercube".into()));
        }
        if let Some(w) = &quad_weights {
            if w.len() != values.len() || w.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Domain("invalid quadrature weights".into()));
            }
        }
        Ok(Self { dim, points, values, quad_weights })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn weights_vec(&self) -> Vec<f64> {
        match &self.quad_weights {
            Some(w) => w.clone(),
            None => vec![1.0 / self.len() as f64; self.len()],
        }
    }
}

/// Tensor-product rational model: flattened row-major numerator coefficients
/// over a flattened simplex-constrained Bernstein tensor denominator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorRationalModel {
    pub basis: JacobiSpec,
    pub numerator: Vec<f64>,
    #[serde(rename = "denominator_weights")]
    pub denominator: SimplexWeights,
    pub domain: [f64; 2],
    #[serde(rename = "shape_numerator")]
    pub num_shape: Vec<usize>,
    #[serde(rename = "shape_denominator")]
    pub den_shape: Vec<usize>,
}

impl TensorRationalModel {
    pub fn new(
        basis: JacobiSpec,
        numerator: Vec<f64>,
        num_shape: Vec<usize>,
        denominator: SimplexWeights,
        den_shape: Vec<usize>,
    ) -> Result<Self> {
        if num_shape.is_empty() || num_shape.len() != den_shape.len() {
            return Err(Error::Mismatch("axis counts differ between numerator and denominator".into()));
        }
        if numerator.len() != num_shape.iter().product::<usize>() {
            return Err(Error::Mismatch("numerator length does not match its shape".into()));
        }
        if denominator.as_slice().len() != den_shape.iter().product::<usize>() {
            return Err(Error::Mismatch("denominator length does not match its shape".into()));
        }
        Ok(Self { basis, numerator, denominator, domain: [0.0, 1.0], num_shape, den_shape })
    }

    pub fn dim(&self) -> usize {
        self.num_shape.len()
    }

    fn num_at(&self, point: &[f64]) -> Result<f64> {
        tensor_contract(point, &self.num_shape, &self.numerator, |d, x| {
            basis::eval_jacobi_basis(self.basis, self.num_shape[d] - 1, x)
        })
    }

    fn den_at(&self, point: &[f64]) -> Result<f64> {
        tensor_contract(point, &self.den_shape, self.denominator.as_slice(), |d, x| {
            basis::eval_bernstein_basis(self.den_shape[d] - 1, x)
        })
    }

    /// Evaluates `N(x)/D(x)` on the hypercube.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim() {
            return Err(Error::Mismatch("point dimension mismatch".into()));
        }
        let den = self.den_at(point)?;
        if den == 0.0 {
            return Err(Error::Pole { x: point[0] });
        }
        Ok(self.num_at(point)? / den)
    }
}

fn tensor_contract(
    point: &[f64],
    shape: &[usize],
    coeffs: &[f64],
    axis_basis: impl Fn(usize, f64) -> Result<Vec<f64>>,
) -> Result<f64> {
    let per_axis: Vec<Vec<f64>> = point
        .iter()
        .enumerate()
        .map(|(d, &x)| axis_basis(d, x))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for (flat, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut rem = flat;
        let mut prod = c;
        for d in (0..shape.len()).rev() {
            let idx = rem % shape[d];
            rem /= shape[d];
            prod *= per_axis[d][idx];
        }
        total += prod;
    }
    Ok(total)
}

/// Penalty weights `prod_d n_d^{n_d}` for every flattened multi-index.
fn mv_penalty_weights(num_shape: &[usize]) -> Result<Vec<f64>> {
    let per_axis: Vec<Vec<f64>> = num_shape
        .iter()
        .map(|&len| penalty_weights(len - 1))
        .collect::<Result<_>>()?;
    let log_total: f64 = num_shape
        .iter()
        .map(|&len| {
            let n = (len - 1) as f64;
            if n > 0.0 { n * n.ln() } else { 0.0 }
        })
        .sum();
    if log_total > (MAX_PENALTY_DEGREE as f64) * (MAX_PENALTY_DEGREE as f64).ln() {
        return Err(Error::PenaltyOverflow { degree: num_shape.iter().map(|l| l - 1).sum() });
    }
    let total: usize = num_shape.iter().product();
    let mut out = vec![1.0; total];
    for (flat, v) in out.iter_mut().enumerate() {
        let mut rem = flat;
        for d in (0..num_shape.len()).rev() {
            let idx = rem % num_shape[d];
            rem /= num_shape[d];
            *v *= per_axis[d][idx];
        }
    }
    Ok(out)
}

/// Multivariate smoothing penalty `sum a^2 prod n_d^{n_d}` with `0^0 = 1`
/// per axis.
pub fn mv_penalty(coeffs: &[f64], num_shape: &[usize]) -> Result<f64> {
    if coeffs.len() != num_shape.iter().product::<usize>() {
        return Err(Error::Mismatch("coefficient array does not match shape".into()));
    }
    let weights = mv_penalty_weights(num_shape)?;
    Ok(coeffs.iter().zip(&weights).map(|(c, p)| c * c * p).sum())
}

/// Per-axis degrees plus the shared fitting controls.
#[derive(Debug, Clone)]
pub struct MvFitConfig {
    pub num_degrees: Vec<usize>,
    pub den_degrees: Vec<usize>,
    pub loss: LossKind,
    pub smoothing: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub hot_start: bool,
    pub seed: u64,
    pub basis: JacobiSpec,
}

impl MvFitConfig {
    pub fn new(num_degrees: Vec<usize>, den_degrees: Vec<usize>) -> Self {
        Self {
            num_degrees,
            den_degrees,
            loss: LossKind::Nonlinear,
            smoothing: 0.0,
            max_iters: 500,
            rel_tol: 1e-10,
            hot_start: true,
            seed: 0,
            basis: JacobiSpec::chebyshev(),
        }
    }

    pub fn uniform(dim: usize, degree: usize) -> Self {
        Self::new(vec![degree; dim], vec![degree; dim])
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.num_degrees.len() != dim || self.den_degrees.len() != dim {
            return Err(Error::Mismatch("per-axis degree count must equal the dataset dimension".into()));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(Error::Config("smoothing must be finite and >= 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    fn from_univariate(config: &FitConfig, dim: usize) -> Self {
        Self {
            num_degrees: vec![config.num_degree; dim],
            den_degrees: vec![config.den_degree; dim],
            loss: config.loss,
            smoothing: config.smoothing,
            max_iters: config.max_iters,
            rel_tol: config.rel_tol,
            hot_start: config.hot_start,
            seed: config.seed,
            basis: config.basis,
        }
    }
}

/// Degrees of freedom reported for comparability:
/// `prod (N_d + 1) + prod (M_d + 1) - 1` (the simplex eats one).
pub fn degrees_of_freedom(config: &MvFitConfig) -> usize {
    let n: usize = config.num_degrees.iter().map(|d| d + 1).product();
    let m: usize = config.den_degrees.iter().map(|d| d + 1).product();
    n + m - 1
}

/// Fit result for the tensor model.
#[derive(Debug, Clone)]
pub struct MvFitReport {
    pub model: TensorRationalModel,
    pub final_loss: f64,
    pub loss_trajectory: Vec<f64>,
    pub iterations: usize,
    pub hot_start_source: HotStartSource,
    pub converged: bool,
}

struct MvDesign {
    y: Vec<f64>,
    mu: Vec<f64>,
    bern: DMatrix<f64>,
    jac: DMatrix<f64>,
    penalty: Vec<f64>,
    lambda: f64,
}

impl MvDesign {
    fn build(dataset: &MvDataset, config: &MvFitConfig) -> Result<Self> {
        let num_shape: Vec<usize> = config.num_degrees.iter().map(|d| d + 1).collect();
        let den_shape: Vec<usize> = config.den_degrees.iter().map(|d| d + 1).collect();
        let n_cols: usize = num_shape.iter().product();
        let m_cols: usize = den_shape.iter().product();
        let rows = dataset.len();
        let mut jac = DMatrix::<f64>::zeros(rows, n_cols);
        let mut bern = DMatrix::<f64>::zeros(rows, m_cols);
        for i in 0..rows {
            let pt = dataset.point(i);
            let jb: Vec<Vec<f64>> = pt
                .iter()
                .enumerate()
                .map(|(d, &x)| basis::eval_jacobi_basis(config.basis, config.num_degrees[d], x))
                .collect::<Result<_>>()?;
            let bb: Vec<Vec<f64>> = pt
                .iter()
                .enumerate()
                .map(|(d, &x)| basis::eval_bernstein_basis(config.den_degrees[d], x))
                .collect::<Result<_>>()?;
            fill_tensor_row(&mut jac, i, &num_shape, &jb);
            fill_tensor_row(&mut bern, i, &den_shape, &bb);
        }
        Ok(Self {
            y: dataset.values.clone(),
            mu: dataset.weights_vec(),
            bern,
            jac,
            penalty: mv_penalty_weights(&num_shape)?,
            lambda: config.smoothing,
        })
    }

    fn den_values(&self, w: &[f64]) -> Vec<f64> {
        (&self.bern * DVector::from_column_slice(w)).as_slice().to_vec()
    }

    fn num_values(&self, a: &[f64]) -> Vec<f64> {
        (&self.jac * DVector::from_column_slice(a)).as_slice().to_vec()
    }

    fn penalty_value(&self, a: &[f64]) -> f64 {
        self.lambda * a.iter().zip(&self.penalty).map(|(c, p)| c * c * p).sum::<f64>()
    }
}

fn fill_tensor_row(target: &mut DMatrix<f64>, row: usize, shape: &[usize], per_axis: &[Vec<f64>]) {
    for col in 0..target.ncols() {
        let mut rem = col;
        let mut prod = 1.0;
        for d in (0..shape.len()).rev() {
            let idx = rem % shape[d];
            rem /= shape[d];
            prod *= per_axis[d][idx];
        }
        target[(row, col)] = prod;
    }
}

struct MvObjective<'a> {
    design: &'a MvDesign,
    kind: LossKind,
    prev_w: Option<Vec<f64>>,
}

impl MvObjective<'_> {
    fn row_scale(&self, den: &[f64]) -> Result<Vec<f64>> {
        match self.kind {
            LossKind::Linearized => Ok(self.design.mu.clone()),
            LossKind::Nonlinear => den
                .iter()
                .zip(&self.design.mu)
                .map(|(&d, &mu)| {
                    if d == 0.0 {
                        Err(Error::Pole { x: f64::NAN })
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
                let dp = self.design.den_values(prev);
                dp.iter()
                    .zip(&self.design.mu)
                    .map(|(&d, &mu)| {
                        if d == 0.0 {
                            Err(Error::Divergence("previous denominator vanishes".into()))
                        } else {
                            Ok(mu / (d * d))
                        }
                    })
                    .collect()
            }
        }
    }
}

impl SimplexObjective for MvObjective<'_> {
    type Coeffs = Vec<f64>;

    fn rebase(&mut self, w: &[f64]) {
        if self.kind == LossKind::Reweighted {
            self.prev_w = Some(w.to_vec());
        }
    }

    fn loss(&self, a: &Vec<f64>, w: &[f64]) -> Result<f64> {
        let d = self.design;
        let den = d.den_values(w);
        let num = d.num_values(a);
        let scale = self.row_scale(&den)?;
        let mut acc = 0.0;
        for i in 0..d.y.len() {
            let r = d.y[i] * den[i] - num[i];
            acc += scale[i] * r * r;
        }
        Ok(acc + d.penalty_value(a))
    }

    fn grad_w(&self, a: &Vec<f64>, w: &[f64]) -> Result<Vec<f64>> {
        let d = self.design;
        let den = d.den_values(w);
        let num = d.num_values(a);
        let scale = self.row_scale(&den)?;
        let mut grad = vec![0.0; w.len()];
        match self.kind {
            LossKind::Nonlinear => {
                for i in 0..d.y.len() {
                    let coeff = 2.0 * scale[i] * (d.y[i] * den[i] - num[i]) * num[i] / den[i];
                    for (j, g) in grad.iter_mut().enumerate() {
                        *g += coeff * d.bern[(i, j)];
                    }
                }
            }
            _ => {
                for i in 0..d.y.len() {
                    let coeff = 2.0 * scale[i] * (d.y[i] * den[i] - num[i]) * d.y[i];
                    for (j, g) in grad.iter_mut().enumerate() {
                        *g += coeff * d.bern[(i, j)];
                    }
                }
            }
        }
        Ok(grad)
    }

    /// Exact penalized solve through the normal equations (Cholesky) with an
    /// SVD fallback; the tensor design has hundreds of columns and is
    /// refactored every outer iteration.
    fn solve_coeffs(&self, w: &[f64]) -> Result<Vec<f64>> {
        let d = self.design;
        let den = d.den_values(w);
        let scale = self.row_scale(&den)?;
        let rows = d.y.len();
        let cols = d.jac.ncols();
        let mut weighted = DMatrix::<f64>::zeros(rows, cols);
        let mut rhs_vec = DVector::<f64>::zeros(rows);
        for i in 0..rows {
            let s = scale[i].sqrt();
            for n in 0..cols {
                weighted[(i, n)] = s * d.jac[(i, n)];
            }
            rhs_vec[i] = s * d.y[i] * den[i];
        }
        let mut gram = weighted.transpose() * &weighted;
        let rhs = weighted.transpose() * &rhs_vec;
        if d.lambda > 0.0 {
            for n in 0..cols {
                gram[(n, n)] += d.lambda * d.penalty[n];
            }
        }
        if let Some(chol) = gram.clone().cholesky() {
            return Ok(chol.solve(&rhs).as_slice().to_vec());
        }
        // Rank-deficient design: minimum-norm SVD on the stacked problem.
        let mut stacked = DMatrix::<f64>::zeros(rows + cols, cols);
        let mut b = DVector::<f64>::zeros(rows + cols);
        stacked.view_mut((0, 0), (rows, cols)).copy_from(&weighted);
        b.rows_mut(0, rows).copy_from(&rhs_vec);
        if d.lambda > 0.0 {
            for n in 0..cols {
                stacked[(rows + n, n)] = (d.lambda * d.penalty[n]).sqrt();
            }
        }
        Ok(linalg::lstsq_min_norm(&stacked, &b)?.as_slice().to_vec())
    }
}

/// Tensor fit with the same outer loop as the univariate case: one simplex
/// step on the flattened weights per iteration, then the exact numerator
/// solve. Hot-start uses the linearized candidate only.
pub fn mv_fit(dataset: &MvDataset, config: &MvFitConfig) -> Result<MvFitReport> {
    config.validate(dataset.dim)?;
    if dataset.is_empty() {
        return Err(Error::Degenerate("empty dataset".into()));
    }
    let design = MvDesign::build(dataset, config)?;
    let mut obj = MvObjective { design: &design, kind: config.loss, prev_w: None };
    let m_cols = design.bern.ncols();
    let uniform = vec![1.0 / m_cols as f64; m_cols];
    let mut start = uniform.clone();
    let mut source = HotStartSource::Uniform;

    // Hot-start through the linearized candidate only; SK is univariate.
    if config.hot_start {
        let mut lin = MvObjective { design: &design, kind: LossKind::Linearized, prev_w: None };
        if let Ok(out) = run_simplex_iteration(&mut lin, uniform, config.max_iters, config.rel_tol) {
            let w = out.weights;
            obj.rebase(&w);
            let usable = obj
                .solve_coeffs(&w)
                .and_then(|a| obj.loss(&a, &w))
                .is_ok();
            if usable {
                start = w;
                source = HotStartSource::Linearized;
            }
        }
    }

    let outcome = run_simplex_iteration(&mut obj, start, config.max_iters, config.rel_tol)?;
    let num_shape: Vec<usize> = config.num_degrees.iter().map(|d| d + 1).collect();
    let den_shape: Vec<usize> = config.den_degrees.iter().map(|d| d + 1).collect();
    let weights = SimplexWeights::new(outcome.weights)?;
    let model = TensorRationalModel::new(config.basis, outcome.coeffs, num_shape, weights, den_shape)?;
    Ok(MvFitReport {
        final_loss: *outcome.trajectory.last().unwrap(),
        loss_trajectory: outcome.trajectory,
        iterations: outcome.iterations,
        hot_start_source: source,
        converged: outcome.converged,
        model,
    })
}

/// RMSE of the tensor model over a dataset's sample points.
pub fn mv_model_rmse(model: &TensorRationalModel, dataset: &MvDataset) -> Result<f64> {
    let mut acc = 0.0;
    for i in 0..dataset.len() {
        let p = model.evaluate(dataset.point(i))?;
        let r = p - dataset.values[i];
        acc += r * r;
    }
    Ok((acc / dataset.len() as f64).sqrt())
}

/// Multivariate analogue of `cross_validate`: deterministic shuffled k-fold,
/// scored by mean held-out RMSE, ties toward smaller smoothing.
pub fn mv_cross_validate(
    dataset: &MvDataset,
    configs: &[MvFitConfig],
    k: usize,
    seed: u64,
) -> Result<(MvFitConfig, Vec<f64>)> {
    if configs.is_empty() {
        return Err(Error::Config("no candidate configs".into()));
    }
    if k < 2 || dataset.len() < k {
        return Err(Error::Config("invalid fold count".into()));
    }
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let folds: Vec<Vec<usize>> = (0..k)
        .map(|f| indices.iter().copied().skip(f).step_by(k).collect())
        .collect();

    let mut scores = Vec::with_capacity(configs.len());
    for config in configs {
        let mut total = 0.0;
        for fold in &folds {
            let in_fold: std::collections::HashSet<usize> = fold.iter().copied().collect();
            let mut tp = Vec::new();
            let mut tv = Vec::new();
            let mut vp = Vec::new();
            let mut vv = Vec::new();
            for i in 0..dataset.len() {
                if in_fold.contains(&i) {
                    vp.extend_from_slice(dataset.point(i));
                    vv.push(dataset.values[i]);
                } else {
                    tp.extend_from_slice(dataset.point(i));
                    tv.push(dataset.values[i]);
                }
            }
            let rmse = (|| -> Result<f64> {
                let train = MvDataset::new(dataset.dim, tp.clone(), tv.clone(), None)?;
                let report = mv_fit(&train, config)?;
                let mut acc = 0.0;
                for (i, y) in vv.iter().enumerate() {
                    let p = report.model.evaluate(&vp[i * dataset.dim..(i + 1) * dataset.dim])?;
                    acc += (p - y) * (p - y);
                }
                Ok((acc / vv.len() as f64).sqrt())
            })()
            .unwrap_or(f64::INFINITY);
            total += rmse;
        }
        scores.push(total / k as f64);
    }

    let mut best = 0;
    for i in 1..configs.len() {
        let better = match scores[i].partial_cmp(&scores[best]) {
            Some(std::cmp::Ordering::Less) => true,
            Some(std::cmp::Ordering::Equal) => configs[i].smoothing < configs[best].smoothing,
            _ => false,
        };
        if better {
            best = i;
        }
    }
    Ok((configs[best].clone(), scores))
}

/// Bivariate fit with matched per-axis degrees driven by a univariate config.
pub fn mv_fit_square(dataset: &MvDataset, config: &FitConfig) -> Result<MvFitReport> {
    mv_fit(dataset, &MvFitConfig::from_univariate(config, dataset.dim))
}
