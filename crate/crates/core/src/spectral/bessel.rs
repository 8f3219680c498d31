//! Integer-order Bessel functions J_m and Y_m, first-kind root finding, and
//! the eigenvalue-ratio criterion for the annular Dirichlet problem.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// J_m(x) for integer order m >= 0 and x >= 0: ascending series up to x = 12,
/// backward (Miller) recurrence with even-order normalization above.
pub fn bessel_j(m: usize, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("J_m requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(if m == 0 { 1.0 } else { 0.0 });
    }
    if x <= 12.0 {
        return Ok(series_j(m, x));
    }
    Ok(miller_j(m, x))
}

fn series_j(m: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    // (x/2)^m / m! built factor by factor to dodge overflow.
    let mut term = 1.0;
    for i in 1..=m {
        term *= half / i as f64;
    }
    let mut sum = term;
    let q = half * half;
    for j in 1..=400 {
        term *= -q / (j as f64 * (m + j) as f64);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn miller_j(m: usize, x: f64) -> f64 {
    // Start far enough above both the order and the turning point.
    let start = (x + 25.0 + 11.0 * x.cbrt()).ceil() as usize;
    let start = (start.max(m + 20) + 1) & !1usize;
    let mut jp = 0.0f64;
    let mut j = 1e-300f64;
    let mut norm = 0.0f64;
    let mut out = 0.0f64;
    for k in (0..=start).rev() {
        let jm = (2.0 * (k + 1) as f64 / x) * j - jp;
        jp = j;
        j = jm;
        if k % 2 == 0 && k > 0 {
            norm += 2.0 * j;
        }
        // The k-th downward value is J_k up to the shared normalization.
        if k == m {
            out = j;
        }
        if j.abs() > 1e250 {
            jp /= 1e250;
            j /= 1e250;
            norm /= 1e250;
            out /= 1e250;
        }
    }
    norm += j; // J_0 term
    out / norm
}

/// Y_m(x) for integer order m >= 0 and x > 0 through the integral
/// representation
/// `Y_m(x) = (1/pi) Int_0^pi sin(x sin t - m t) dt
///         - (1/pi) Int_0^inf (e^{mt} + (-1)^m e^{-mt}) e^{-x sinh t} dt`,
/// both parts by adaptive Simpson quadrature.
pub fn bessel_y(m: usize, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("Y_m requires x > 0, got {x}")));
    }
    let mf = m as f64;

    // Oscillatory part: pre-split so each panel sees a bounded phase range.
    let oscillatory = {
        let f = |t: f64| (x * t.sin() - mf * t).sin();
        let panels = ((x + mf) / 2.0).ceil().clamp(8.0, 8192.0) as usize;
        let mut acc = 0.0;
        for p in 0..panels {
            let a = PI * p as f64 / panels as f64;
            let b = PI * (p + 1) as f64 / panels as f64;
            acc += adaptive_simpson(&f, a, b, 1e-13 / panels as f64, 40);
        }
        acc
    };

    // Exponential part: truncate where the decay has killed the integrand.
    let exponential = {
        let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        let g = |t: f64| {
            let damp = -x * t.sinh();
            (mf * t + damp).exp() + sign * (damp - mf * t).exp()
        };
        let mut upper = 1.0f64;
        while x * upper.sinh() - mf * upper < 45.0 {
            upper *= 1.5;
            if upper > 700.0 {
                break;
            }
        }
        let panels = 32;
        let mut acc = 0.0;
        for p in 0..panels {
            let a = upper * p as f64 / panels as f64;
            let b = upper * (p + 1) as f64 / panels as f64;
            acc += adaptive_simpson(&g, a, b, 1e-13, 40);
        }
        acc
    };

    Ok((oscillatory - exponential) / PI)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let (fd, fe) = (f(d), f(e));
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
            + simpson_step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
    }
}

/// Squares of the first k positive roots of J_m: each root bracketed by a
/// 0.05-step sign scan and refined by bisection to 1e-12.
pub fn reference_eigenvalues(m: usize, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Config("need at least one eigenvalue".into()));
    }
    let mut roots = Vec::with_capacity(k);
    let step = 0.05;
    let mut x = step;
    let mut prev = bessel_j(m, x)?;
    while roots.len() < k && x < 1000.0 {
        let next_x = x + step;
        let value = bessel_j(m, next_x)?;
        if prev == 0.0 {
            roots.push(x);
        } else if prev * value < 0.0 {
            roots.push(bisect_j(m, x, next_x)?);
        }
        x = next_x;
        prev = value;
    }
    if roots.len() < k {
        return Err(Error::Evaluation(format!("found only {} roots of J_{m}", roots.len())));
    }
    Ok(roots.into_iter().map(|r| r * r).collect())
}

fn bisect_j(m: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut flo = bessel_j(m, lo)?;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let fm = bessel_j(m, mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Deviation of the Dirichlet cross-product ratio from one:
/// `|J_m(sqrt(L) e^a) Y_m(sqrt(L)) / (J_m(sqrt(L)) Y_m(sqrt(L) e^a)) - 1|`.
pub fn eigenvalue_ratio_error(lambda: f64, a: f64, m: usize) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("ratio criterion needs lambda > 0, got {lambda}")));
    }
    let root = lambda.sqrt();
    let outer = root * a.exp();
    let j_outer = bessel_j(m, outer)?;
    let y_inner = bessel_y(m, root)?;
    let j_inner = bessel_j(m, root)?;
    let y_outer = bessel_y(m, outer)?;
    let num = j_outer * y_inner;
    let den = j_inner * y_outer;
    if !num.is_finite() || !den.is_finite() || den == 0.0 {
        return Err(Error::Evaluation(format!(
            "Bessel factor underflow in the ratio at lambda = {lambda}"
        )));
    }
    Ok((num / den - 1.0).abs())
}
