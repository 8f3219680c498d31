//! AAA baseline: greedy barycentric rational fitting with Froissart cleanup,
//! plus pole computation through the arrowhead pencil.

use crate::error::{Error, Result};
use crate::linalg;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Barycentric rational form: support points, stored values, and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricModel {
    pub support_points: Vec<f64>,
    pub support_values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl BarycentricModel {
    pub fn new(support_points: Vec<f64>, support_values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support_points.is_empty()
            || support_points.len() != support_values.len()
            || support_points.len() != weights.len()
        {
            return Err(Error::Mismatch("barycentric arrays must be equal-length and nonempty".into()));
        }
        for (i, xi) in support_points.iter().enumerate() {
            for xj in &support_points[i + 1..] {
                if xi == xj {
                    return Err(Error::Degenerate(format!("duplicate support point {xi}")));
                }
            }
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::Degenerate("all barycentric weights are zero".into()));
        }
        Ok(Self { support_points, support_values, weights })
    }

    pub fn terms(&self) -> usize {
        self.support_points.len()
    }
}

/// Evaluates the barycentric quotient; support points return their stored
/// values exactly.
pub fn barycentric_eval(model: &BarycentricModel, x: f64) -> Result<f64> {
    for (k, &xk) in model.support_points.iter().enumerate() {
        if x == xk {
            return Ok(model.support_values[k]);
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..model.terms() {
        let c = model.weights[k] / (x - model.support_points[k]);
        num += c * model.support_values[k];
        den += c;
    }
    if den == 0.0 {
        return Err(Error::Pole { x });
    }
    Ok(num / den)
}

/// Relative residue threshold for the Froissart cleanup pass.
const CLEANUP_RESIDUE_TOL: f64 = 1e-13;
/// Poles beyond this magnitude are numerical stand-ins for infinity.
const POLE_MAGNITUDE_CAP: f64 = 1e12;

/// Greedy AAA fit: repeatedly adopt the worst-residual sample as a support
/// point and re-solve the Loewner least-squares problem for weights via the
/// smallest singular vector, stopping at `tol * max|f|` or `max_terms`.
/// One cleanup pass drops support points tied to negligible-residue poles.
pub fn aaa_fit(points: &[f64], values: &[f64], max_terms: usize, tol: f64) -> Result<BarycentricModel> {
    let (model, _) = aaa_fit_with_history(points, values, max_terms, tol)?;
    Ok(model)
}

/// Per-iteration residual record: the nonlinear max residual drives the
/// stopping rule; the linearized norm is the quantity the SVD minimizes and
/// is monotone as support points are added.
#[derive(Debug, Clone, Copy)]
pub struct AaaStep {
    pub max_residual: f64,
    pub linearized_norm: f64,
}

/// As [`aaa_fit`], also returning the residual history after each solve.
pub fn aaa_fit_with_history(
    points: &[f64],
    values: &[f64],
    max_terms: usize,
    tol: f64,
) -> Result<(BarycentricModel, Vec<AaaStep>)> {
    if points.len() != values.len() || points.is_empty() {
        return Err(Error::Mismatch("points/values must be equal-length and nonempty".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    if max_terms == 0 {
        return Err(Error::Config("max_terms must be at least 1".into()));
    }
    for (i, xi) in points.iter().enumerate() {
        for xj in &points[i + 1..] {
            if xi == xj {
                return Err(Error::Degenerate(format!("duplicate sample point {xi}")));
            }
        }
    }

    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut residual: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let mut in_support = vec![false; points.len()];
    let mut support: Vec<usize> = Vec::new();
    let mut weights: Vec<f64>;
    let mut history = Vec::new();

    loop {
        let mut best = None;
        let mut best_abs = -1.0;
        for (i, r) in residual.iter().enumerate() {
            if !in_support[i] && r.abs() > best_abs {
                best_abs = r.abs();
                best = Some(i);
            }
        }
        let next = best.ok_or_else(|| Error::Degenerate("no samples left to adopt".into()))?;
        in_support[next] = true;
        support.push(next);

        if points.len() - support.len() < 2 {
            return Err(Error::Degenerate(
                "fewer than 2 non-support samples remain for the least-squares solve".into(),
            ));
        }
        let (w, linearized_norm) = solve_loewner_weights(points, values, &in_support, &support)?;
        weights = w;

        let model = model_from_indices(points, values, &support, &weights)?;
        let mut max_res = 0.0f64;
        for (i, &x) in points.iter().enumerate() {
            if in_support[i] {
                residual[i] = 0.0;
                continue;
            }
            let r = values[i] - barycentric_eval(&model, x)?;
            residual[i] = r;
            max_res = max_res.max(r.abs());
        }
        history.push(AaaStep { max_residual: max_res, linearized_norm });

        if max_res <= tol * scale || support.len() >= max_terms {
            break;
        }
    }

    let mut model = model_from_indices(points, values, &support, &weights)?;

    // Cleanup: drop support points nearest to negligible-residue poles, then
    // re-solve once.
    if model.terms() >= 2 {
        if let Ok(poles) = aaa_poles(&model) {
            let mut drop = std::collections::HashSet::new();
            for pole in poles {
                let residue = pole_residue(&model, pole);
                if residue.norm() < CLEANUP_RESIDUE_TOL * scale.max(1e-300) {
                    let mut nearest = 0;
                    let mut dist = f64::INFINITY;
                    for (j, &sx) in model.support_points.iter().enumerate() {
                        let d = (Complex64::new(sx, 0.0) - pole).norm();
                        if d < dist {
                            dist = d;
                            nearest = j;
                        }
                    }
                    drop.insert(support[nearest]);
                }
            }
            if !drop.is_empty() && support.len() - drop.len() >= 1 {
                support.retain(|i| !drop.contains(i));
                for (i, flag) in in_support.iter_mut().enumerate() {
                    *flag = support.contains(&i);
                }
                let (weights, _) = solve_loewner_weights(points, values, &in_support, &support)?;
                model = model_from_indices(points, values, &support, &weights)?;
            }
        }
    }

    Ok((model, history))
}

fn model_from_indices(
    points: &[f64],
    values: &[f64],
    support: &[usize],
    weights: &[f64],
) -> Result<BarycentricModel> {
    BarycentricModel::new(
        support.iter().map(|&i| points[i]).collect(),
        support.iter().map(|&i| values[i]).collect(),
        weights.to_vec(),
    )
}

/// Weights minimizing the linearized residual over non-support rows, from the
/// right singular vector of the Loewner matrix. Also returns the attained
/// residual norm `|A w|`.
fn solve_loewner_weights(
    points: &[f64],
    values: &[f64],
    in_support: &[bool],
    support: &[usize],
) -> Result<(Vec<f64>, f64)> {
    let m = support.len();
    let rows: Vec<usize> = (0..points.len()).filter(|&i| !in_support[i]).collect();
    let mut a = DMatrix::<f64>::zeros(rows.len(), m);
    for (r, &i) in rows.iter().enumerate() {
        for (c, &k) in support.iter().enumerate() {
            a[(r, c)] = (values[i] - values[k]) / (points[i] - points[k]);
        }
    }
    let v = linalg::smallest_singular_vector(&a)?;
    let norm = (&a * &v).norm();
    Ok((v.as_slice().to_vec(), norm))
}

/// Residue of the barycentric quotient at a pole: `n(p) / d'(p)`.
fn pole_residue(model: &BarycentricModel, pole: Complex64) -> Complex64 {
    let mut num = Complex64::new(0.0, 0.0);
    let mut dden = Complex64::new(0.0, 0.0);
    for k in 0..model.terms() {
        let diff = pole - Complex64::new(model.support_points[k], 0.0);
        num += Complex64::new(model.weights[k] * model.support_values[k], 0.0) / diff;
        dden -= Complex64::new(model.weights[k], 0.0) / (diff * diff);
    }
    num / dden
}

/// Poles of the barycentric form: finite generalized eigenvalues of the
/// (m+1) x (m+1) arrowhead pencil, verified against the denominator and with
/// numerically infinite modes discarded. Falls back to a sign-change grid
/// scan on [0, 1] if the eigenvalue route fails.
pub fn aaa_poles(model: &BarycentricModel) -> Result<Vec<Complex64>> {
    let m = model.terms();
    if m < 2 {
        return Err(Error::Config("pole computation needs at least 2 support points".into()));
    }
    let mut e = DMatrix::<f64>::zeros(m + 1, m + 1);
    let mut b = DMatrix::<f64>::zeros(m + 1, m + 1);
    for k in 0..m {
        e[(0, k + 1)] = model.weights[k];
        e[(k + 1, 0)] = 1.0;
        e[(k + 1, k + 1)] = model.support_points[k];
        b[(k + 1, k + 1)] = 1.0;
    }

    let candidates = match linalg::pencil_eigenvalues(&e, &b) {
        Ok(c) => c,
        Err(_) => sign_scan_poles(model),
    };

    let lo = model.support_points.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = model.support_points.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (lo + hi);
    let reach = 1e3 * (hi - lo).max(1.0);
    let mut poles = Vec::new();
    for p in candidates {
        if !p.re.is_finite() || !p.im.is_finite() || p.norm() > POLE_MAGNITUDE_CAP {
            continue;
        }
        // Defective infinite modes split into huge finite pairs; anything this
        // far from the support hull is numerical debris, not a pole.
        if (p - Complex64::new(center, 0.0)).norm() > reach {
            continue;
        }
        let (d, scale) = denominator_with_scale(model, p);
        if d.norm() <= 1e-8 * scale {
            poles.push(p);
        }
    }
    poles.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(poles)
}

fn denominator_with_scale(model: &BarycentricModel, x: Complex64) -> (Complex64, f64) {
    let mut d = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for k in 0..model.terms() {
        let term = Complex64::new(model.weights[k], 0.0)
            / (x - Complex64::new(model.support_points[k], 0.0));
        d += term;
        scale += term.norm();
    }
    (d, scale)
}

fn sign_scan_poles(model: &BarycentricModel) -> Vec<Complex64> {
    let n = 10_000;
    let mut out = Vec::new();
    let d_at = |x: f64| -> Option<f64> {
        if model.support_points.contains(&x) {
            return None;
        }
        Some(
            model
                .weights
                .iter()
                .zip(&model.support_points)
                .map(|(w, s)| w / (x - s))
                .sum(),
        )
    };
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let x = i as f64 / n as f64;
        let Some(v) = d_at(x) else {
            prev = None;
            continue;
        };
        if let Some((px, pv)) = prev {
            // Only trust sign changes with no support point inside the gap,
            // where the denominator is continuous.
            let crosses_support = model
                .support_points
                .iter()
                .any(|&s| s > px && s < x);
            if !crosses_support && pv * v < 0.0 {
                let root = bisect_denominator(model, px, x);
                out.push(Complex64::new(root, 0.0));
            }
        }
        prev = Some((x, v));
    }
    out
}

fn bisect_denominator(model: &BarycentricModel, mut lo: f64, mut hi: f64) -> f64 {
    let d = |x: f64| -> f64 {
        model
            .weights
            .iter()
            .zip(&model.support_points)
            .map(|(w, s)| w / (x - s))
            .sum()
    };
    let mut flo = d(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = d(mid);
        if fm == 0.0 || hi - lo < 1e-15 {
            return mid;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

/// Real poles inside [0, 1] (the pole-audit question every experiment asks).
pub fn real_poles_in_unit_interval(model: &BarycentricModel) -> Result<Vec<f64>> {
    let poles = aaa_poles(model)?;
    Ok(poles
        .into_iter()
        .filter(|p| p.im.abs() <= 1e-8 * p.re.abs().max(1.0))
        .map(|p| p.re)
        .filter(|re| (-1e-9..=1.0 + 1e-9).contains(re))
        .collect())
}
