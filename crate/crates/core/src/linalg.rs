//! Dense linear-algebra helpers shared by the fitting, baseline, and spectral
//! modules: minimum-norm least squares, polynomial roots via companion
//! matrices, matrix balancing, and generalized-pencil eigenvalues.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Minimum-norm least-squares solution of `A x ~ b` through an SVD with a
/// relative rank cutoff. Rank deficiency falls back to the minimum-norm
/// solution rather than erroring.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = smax * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON;
    svd.solve(b, eps).map_err(|e| Error::Solver(e.to_string()))
}

/// Multi-right-hand-side variant sharing one factorization.
pub fn lstsq_min_norm_multi(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = smax * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON;
    svd.solve(b, eps).map_err(|e| Error::Solver(e.to_string()))
}

/// Right singular vector for the smallest singular value of `A`.
pub fn smallest_singular_vector(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Solver("SVD did not produce V^T".into()))?;
    let mut idx = 0;
    let mut smallest = f64::INFINITY;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < smallest {
            smallest = *s;
            idx = i;
        }
    }
    Ok(v_t.row(idx).transpose())
}

/// Parlett-Reinsch balancing with powers of two: a diagonal similarity that
/// equilibrates row/column norms without rounding. Improves eigenvalue
/// accuracy for badly graded matrices (collocation operators).
pub fn balance_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c: f64 = 0.0;
            let mut r: f64 = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            let s = c + r;
            while cc < rr / radix {
                f *= radix;
                cc *= radix;
                rr /= radix;
            }
            while cc >= rr * radix {
                f /= radix;
                cc /= radix;
                rr *= radix;
            }
            if (cc + rr) < 0.95 * s && f != 1.0 {
                done = false;
                for j in 0..n {
                    let v = m[(i, j)] / f;
                    m[(i, j)] = v;
                }
                for j in 0..n {
                    let v = m[(j, i)] * f;
                    m[(j, i)] = v;
                }
            }
        }
    }
}

/// Eigenvalues of a general real matrix (balanced Schur).
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    let mut work = m.clone();
    balance_in_place(&mut work);
    work.complex_eigenvalues()
        .iter()
        .map(|c| Complex64::new(c.re, c.im))
        .collect()
}

/// Roots of `c_0 + c_1 x + ... + c_d x^d` via the balanced companion matrix.
/// Leading coefficients below `1e-13` of the largest magnitude are trimmed.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Err(Error::Degenerate("zero polynomial has no defined roots".into()));
    }
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.len() > 1 && c.last().unwrap().abs() < 1e-13 * scale {
        c.pop();
    }
    let d = c.len() - 1;
    if d == 0 {
        return Ok(Vec::new());
    }
    let lead = c[d];
    let mut companion = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        companion[(i, d - 1)] = -c[i] / lead;
    }
    Ok(eigenvalues(&companion))
}

/// Generalized eigenvalues of the pencil `A v = lambda B v`.
///
/// Rows of `B` that vanish are read as linear constraints taken from the
/// matching rows of `A` (boundary conditions, barycentric normalizations).
/// The pencil is reduced to the constraint null space and solved as a
/// standard eigenproblem when the reduced `B` is invertible, with a
/// shift-invert fallback otherwise. Infinite modes are discarded.
pub fn pencil_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::Mismatch("pencil matrices must be square and equal-sized".into()));
    }
    let b_scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if b_scale == 0.0 {
        return Err(Error::Degenerate("B is identically zero".into()));
    }
    let zero_rows: Vec<usize> = (0..n)
        .filter(|&i| (0..n).all(|j| b[(i, j)].abs() <= 1e-14 * b_scale))
        .collect();

    let (f, g) = if zero_rows.is_empty() {
        (a.clone(), b.clone())
    } else {
        let c = zero_rows.len();
        let mut constraints = DMatrix::<f64>::zeros(c, n);
        for (r, &i) in zero_rows.iter().enumerate() {
            constraints.set_row(r, &a.row(i));
        }
        let z = null_space(&constraints)?;
        if z.ncols() != n - c {
            return Err(Error::Solver(format!(
                "constraint rows are rank-deficient: null space has dimension {}, expected {}",
                z.ncols(),
                n - c
            )));
        }
        let keep: Vec<usize> = (0..n).filter(|i| !zero_rows.contains(i)).collect();
        let mut a_rest = DMatrix::<f64>::zeros(keep.len(), n);
        let mut b_rest = DMatrix::<f64>::zeros(keep.len(), n);
        for (r, &i) in keep.iter().enumerate() {
            a_rest.set_row(r, &a.row(i));
            b_rest.set_row(r, &b.row(i));
        }
        (&a_rest * &z, &b_rest * &z)
    };

    // Direct route: invert G and solve the standard problem.
    if let Some(g_inv) = g.clone().try_inverse() {
        let cond_proxy = g_inv.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            * g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if cond_proxy < 1e14 {
            return Ok(eigenvalues(&(g_inv * &f)));
        }
    }

    // Shift-invert fallback for singular or ill-conditioned G.
    for &sigma in &[0.0, 0.31830988618367, -1.0, 1.7724538509055, 13.0] {
        let shifted = &f - sigma * &g;
        if let Some(inv) = shifted.try_inverse() {
            let m = inv * &g;
            let mus = eigenvalues(&m);
            let mu_scale = mus.iter().fold(0.0f64, |acc, c| acc.max(c.norm()));
            if mu_scale == 0.0 {
                continue;
            }
            let vals: Vec<Complex64> = mus
                .into_iter()
                .filter(|mu| mu.norm() > 1e-12 * mu_scale)
                .map(|mu| Complex64::new(sigma, 0.0) + mu.inv())
                .collect();
            return Ok(vals);
        }
    }
    Err(Error::Solver("pencil is singular for every trial shift".into()))
}

/// Orthonormal basis of the null space of `c` (SVD based).
pub fn null_space(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = c.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Solver("SVD did not produce V^T".into()))?;
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = smax * (c.nrows().max(c.ncols()) as f64) * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let n = c.ncols();
    let mut z = DMatrix::<f64>::zeros(n, n - rank);
    // v_t from nalgebra's thin SVD has min(m, n) rows; rows beyond the rank
    // span part of the null space, the rest is completed by Gram-Schmidt
    // against the row space.
    let mut cols = Vec::new();
    for i in rank..v_t.nrows() {
        cols.push(v_t.row(i).transpose());
    }
    if cols.len() < n - rank {
        // Complete with coordinate vectors orthogonalized against everything.
        let mut basis: Vec<DVector<f64>> = (0..v_t.nrows())
            .map(|i| v_t.row(i).transpose())
            .collect();
        basis.truncate(rank);
        basis.extend(cols.iter().cloned());
        for j in 0..n {
            if basis.len() >= n {
                break;
            }
            let mut e = DVector::<f64>::zeros(n);
            e[j] = 1.0;
            for b in &basis {
                let proj = b.dot(&e);
                e -= b * proj;
            }
            let norm = e.norm();
            if norm > 1e-8 {
                let e = e / norm;
                cols.push(e.clone());
                basis.push(e);
            }
        }
    }
    if cols.len() != n - rank {
        return Err(Error::Solver("null-space completion failed".into()));
    }
    for (j, col) in cols.iter().enumerate() {
        z.set_column(j, col);
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let x_true = DVector::from_vec(vec![2.0, -1.0]);
        let b = &a * &x_true;
        let x = lstsq_min_norm(&a, &b).unwrap();
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn lstsq_rank_deficient_min_norm() {
        // Columns are identical: the min-norm solution splits the weight.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let b = DVector::from_vec(vec![2.0, 4.0]);
        let x = lstsq_min_norm(&a, &b).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn roots_of_quadratic() {
        // (x - 0.5)(x - 2) = 1 - 2.5 x + x^2
        let roots = polynomial_roots(&[1.0, -2.5, 1.0]).unwrap();
        let mut re: Vec<f64> = roots.iter().map(|r| r.re).collect();
        re.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(re[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(re[1], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn roots_trims_tiny_leading_coefficient() {
        let roots = polynomial_roots(&[-1.0, 1.0, 1e-16]).unwrap();
        assert_eq!(roots.len(), 1);
        assert_abs_diff_eq!(roots[0].re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn pencil_diagonal_case() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 5.0]);
        let b = DMatrix::identity(2, 2);
        let mut vals: Vec<f64> = pencil_eigenvalues(&a, &b)
            .unwrap()
            .iter()
            .map(|c| c.re)
            .collect();
        vals.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(vals[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn pencil_with_constraint_row() {
        // Constraint v_0 + v_1 = 0 plus one eigen row: 2 v_0 = lambda v_0.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let vals = pencil_eigenvalues(&a, &b).unwrap();
        assert_eq!(vals.len(), 1);
        assert_abs_diff_eq!(vals[0].re, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn balancing_preserves_eigenvalues() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 1e8, 0.0, 1e-8, 2.0, 1e6, 0.0, 1e-6, 3.0],
        );
        let mut before: Vec<f64> = m.complex_eigenvalues().iter().map(|c| c.re).collect();
        let after_c = eigenvalues(&m);
        let mut after: Vec<f64> = after_c.iter().map(|c| c.re).collect();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        for (x, y) in before.iter().zip(&after) {
            assert!((x - y).abs() < 1e-6 * x.abs().max(1.0));
        }
    }
}
