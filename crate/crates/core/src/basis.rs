//! Bernstein and shifted-Jacobi bases on [0, 1], monomial/Bernstein coefficient
//! conversions, and root-bound diagnostics for denominators.

use crate::error::{Error, Result};

/// Coefficients of a polynomial in the monomial basis; entry `j` multiplies `x^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialCoeffs(pub Vec<f64>);

/// Coefficients of a polynomial in the Bernstein basis of degree `len - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinCoeffs(pub Vec<f64>);

impl MonomialCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Degenerate("empty coefficient vector".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite monomial coefficient".into()));
        }
        Ok(Self(coeffs))
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}

impl BernsteinCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Degenerate("empty coefficient vector".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite Bernstein coefficient".into()));
        }
        Ok(Self(coeffs))
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let basis = eval_bernstein_basis(self.degree(), x).expect("x must lie in [0, 1]");
        self.0.iter().zip(&basis).map(|(c, b)| c * b).sum()
    }
}

/// Jacobi parameters (alpha, beta), shifted to the domain [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct JacobiSpec {
    pub alpha: f64,
    pub beta: f64,
}

impl JacobiSpec {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0) {
            return Err(Error::Config(format!(
                "Jacobi parameters must exceed -1, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Shifted Chebyshev (alpha = beta = -1/2), the default numerator basis.
    pub fn chebyshev() -> Self {
        Self { alpha: -0.5, beta: -0.5 }
    }

    /// Shifted Legendre (alpha = beta = 0).
    pub fn legendre() -> Self {
        Self { alpha: 0.0, beta: 0.0 }
    }
}

fn check_unit_interval(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
    }
    Ok(())
}

/// All degree-`n` Bernstein basis values at `x`, built by the degree-raising
/// recurrence so the entries are nonnegative and sum to one.
pub fn eval_bernstein_basis(n: usize, x: f64) -> Result<Vec<f64>> {
    check_unit_interval(x)?;
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    let one_minus = 1.0 - x;
    for j in 1..=n {
        b[j] = x * b[j - 1];
        for k in (1..j).rev() {
            b[k] = x * b[k - 1] + one_minus * b[k];
        }
        b[0] *= one_minus;
    }
    Ok(b)
}

/// Shifted Jacobi polynomial values `P~_0(x), ..., P~_n(x)` with the
/// conventional normalization `P_n(1) = C(n + alpha, n)`, via the standard
/// three-term recurrence on `t = 2x - 1`.
pub fn eval_jacobi_basis(spec: JacobiSpec, n: usize, x: f64) -> Result<Vec<f64>> {
    check_unit_interval(x)?;
    let (a, b) = (spec.alpha, spec.beta);
    let t = 2.0 * x - 1.0;
    let mut vals = Vec::with_capacity(n + 1);
    vals.push(1.0);
    if n >= 1 {
        vals.push(0.5 * (a - b) + 0.5 * (a + b + 2.0) * t);
    }
    for k in 2..=n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let c1 = 2.0 * kf * (kf + a + b) * (s - 2.0);
        let c2 = (s - 1.0) * s * (s - 2.0);
        let c3 = (s - 1.0) * (a * a - b * b);
        let c4 = 2.0 * (kf + a - 1.0) * (kf + b - 1.0) * s;
        let next = ((c2 * t + c3) * vals[k - 1] - c4 * vals[k - 2]) / c1;
        vals.push(next);
    }
    Ok(vals)
}

/// Natural logs of factorials 0! ..= n!.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut lf = vec![0.0; n + 1];
    for i in 2..=n {
        lf[i] = lf[i - 1] + (i as f64).ln();
    }
    lf
}

fn ln_binomial(lf: &[f64], n: usize, k: usize) -> f64 {
    lf[n] - lf[k] - lf[n - k]
}

/// Bernstein coefficients of the same polynomial: `b_j = sum_{k<=j} C(j,k)/C(n,k) a_k`.
/// Binomial ratios go through log space so degrees beyond ~60 cannot overflow.
pub fn monomial_to_bernstein(a: &MonomialCoeffs) -> BernsteinCoeffs {
    let n = a.degree();
    let lf = ln_factorials(n);
    let mut b = vec![0.0; n + 1];
    for (j, bj) in b.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &ak) in a.0.iter().take(j + 1).enumerate() {
            if ak == 0.0 {
                continue;
            }
            let ratio = (ln_binomial(&lf, j, k) - ln_binomial(&lf, n, k)).exp();
            acc += ratio * ak;
        }
        *bj = acc;
    }
    BernsteinCoeffs(b)
}

/// Monomial coefficients from Bernstein ones:
/// `a_j = sum_{k<=j} (-1)^{j-k} C(n,j) C(j,k) b_k`.
pub fn bernstein_to_monomial(b: &BernsteinCoeffs) -> MonomialCoeffs {
    let n = b.degree();
    let lf = ln_factorials(n);
    let mut a = vec![0.0; n + 1];
    for (j, aj) in a.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &bk) in b.0.iter().take(j + 1).enumerate() {
            if bk == 0.0 {
                continue;
            }
            let mag = (ln_binomial(&lf, n, j) + ln_binomial(&lf, j, k)).exp();
            let signed = if (j - k) % 2 == 0 { mag } else { -mag };
            acc += signed * bk;
        }
        *aj = acc;
    }
    MonomialCoeffs(a)
}

/// Verdict of the Bernstein-coefficient root test on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootExclusion {
    NoRootsInClosedInterval,
    RootAtZero,
    RootAtOne,
    RootAtBoth,
    Inconclusive,
}

/// Coefficients within this magnitude of zero are treated as exactly zero;
/// fitted weights hit the simplex boundary numerically.
const ZERO_WEIGHT_TOL: f64 = 1e-14;

/// Root exclusion on [0, 1] from the signs of the converted Bernstein
/// coefficients. Nonnegative coefficients with positive endpoints certify
/// a root-free closed interval; endpoint zeros pin boundary roots; any
/// negative coefficient is inconclusive.
pub fn bernstein_root_exclusion(a: &MonomialCoeffs) -> RootExclusion {
    let b = monomial_to_bernstein(a);
    if b.0.iter().any(|&v| v < -ZERO_WEIGHT_TOL) {
        return RootExclusion::Inconclusive;
    }
    if b.0.iter().all(|&v| v.abs() <= ZERO_WEIGHT_TOL) {
        return RootExclusion::Inconclusive;
    }
    let zero_at_0 = b.0[0].abs() <= ZERO_WEIGHT_TOL;
    let zero_at_1 = b.0[b.degree()].abs() <= ZERO_WEIGHT_TOL;
    match (zero_at_0, zero_at_1) {
        (false, false) => RootExclusion::NoRootsInClosedInterval,
        (true, false) => RootExclusion::RootAtZero,
        (false, true) => RootExclusion::RootAtOne,
        (true, true) => RootExclusion::RootAtBoth,
    }
}

/// Lagrange's lower bound on root magnitudes: `1 / max{1, sum |a_i / a_0|}`.
pub fn lagrange_root_lower_bound(a: &MonomialCoeffs) -> Result<f64> {
    if a.0[0] == 0.0 {
        return Err(Error::Degenerate("Lagrange bound requires a_0 != 0".into()));
    }
    let sum: f64 = a.0[1..].iter().map(|c| (c / a.0[0]).abs()).sum();
    Ok(1.0 / sum.max(1.0))
}

/// Cauchy's lower bound on root magnitudes: `1 / (1 + max_i a_i / a_0)`.
pub fn cauchy_root_lower_bound(a: &MonomialCoeffs) -> Result<f64> {
    if a.0[0] == 0.0 {
        return Err(Error::Degenerate("Cauchy bound requires a_0 != 0".into()));
    }
    let max_ratio = a.0[1..]
        .iter()
        .map(|c| c / a.0[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(1.0 / (1.0 + max_ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn bernstein_linear_case() {
        let b = eval_bernstein_basis(1, 0.3).unwrap();
        assert_abs_diff_eq!(b[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn bernstein_symmetry_degree_two() {
        let b = eval_bernstein_basis(2, 0.5).unwrap();
        assert_abs_diff_eq!(b[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b[2], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn bernstein_partition_of_unity() {
        let b = eval_bernstein_basis(7, 0.42).unwrap();
        let sum: f64 = b.iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn bernstein_rejects_out_of_domain() {
        assert!(matches!(eval_bernstein_basis(3, 1.5), Err(Error::Domain(_))));
        assert!(matches!(eval_bernstein_basis(3, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn jacobi_legendre_endpoints() {
        let spec = JacobiSpec::legendre();
        let v = eval_jacobi_basis(spec, 1, 1.0).unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-15);
        // P_n(-1) = (-1)^n
        let v = eval_jacobi_basis(spec, 2, 0.0).unwrap();
        assert_abs_diff_eq!(v[1], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn jacobi_legendre_midpoint() {
        // Oracle: three-term recurrence by hand at t = 0 gives P_2(0) = -1/2.
        let v = eval_jacobi_basis(JacobiSpec::legendre(), 2, 0.5).unwrap();
        assert_abs_diff_eq!(v[2], -0.5, epsilon = 1e-14);
    }

    #[test]
    fn jacobi_normalization_at_one() {
        // P_n^{(a,b)}(1) = C(n + a, n); for a = -1/2, n = 2 this is (3/2)(1/2)/2 = 3/8.
        let v = eval_jacobi_basis(JacobiSpec::chebyshev(), 2, 1.0).unwrap();
        assert_abs_diff_eq!(v[2], 0.375, epsilon = 1e-14);
    }

    #[test]
    fn monomial_to_bernstein_expansion_oracle() {
        // 1 + x^2 = 1*B_0 + 1*B_1 + 2*B_2: expand and compare.
        let a = MonomialCoeffs::new(vec![1.0, 0.0, 1.0]).unwrap();
        let b = monomial_to_bernstein(&a);
        assert_abs_diff_eq!(b.0[0], 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(b.0[1], 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(b.0[2], 2.0, epsilon = 1e-13);
    }

    #[test]
    fn monomial_to_bernstein_constants() {
        let a = MonomialCoeffs::new(vec![3.5, 0.0, 0.0, 0.0]).unwrap();
        let b = monomial_to_bernstein(&a);
        for v in &b.0 {
            assert_abs_diff_eq!(*v, 3.5, epsilon = 1e-13);
        }
    }

    #[test]
    fn monomial_to_bernstein_theorem_case() {
        // 1 - x with i = 1, n = 2, minus sign: b_j = 1 - C(j,1)/C(2,1).
        let a = MonomialCoeffs::new(vec![1.0, -1.0, 0.0]).unwrap();
        let b = monomial_to_bernstein(&a);
        assert_abs_diff_eq!(b.0[0], 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(b.0[1], 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(b.0[2], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn bernstein_to_monomial_half_endpoints() {
        // (1/2) B_0 + (1/2) B_2 -> 1/2 - x + x^2.
        let b = BernsteinCoeffs::new(vec![0.5, 0.0, 0.5]).unwrap();
        let a = bernstein_to_monomial(&b);
        assert_abs_diff_eq!(a.0[0], 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(a.0[1], -1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(a.0[2], 1.0, epsilon = 1e-13);
    }

    #[test]
    fn roundtrip_random_degree_eight() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let coeffs: Vec<f64> = (0..9).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a = MonomialCoeffs::new(coeffs.clone()).unwrap();
            let back = bernstein_to_monomial(&monomial_to_bernstein(&a));
            for (orig, rt) in coeffs.iter().zip(&back.0) {
                assert!((orig - rt).abs() < 1e-10, "{orig} vs {rt}");
            }
        }
    }

    #[test]
    fn root_exclusion_cases() {
        let a = MonomialCoeffs::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(bernstein_root_exclusion(&a), RootExclusion::NoRootsInClosedInterval);

        // Counter-example with no roots in [0,1] despite a small Lagrange bound.
        let a = MonomialCoeffs::new(vec![0.5, -1.0, 1.0]).unwrap();
        assert_eq!(bernstein_root_exclusion(&a), RootExclusion::NoRootsInClosedInterval);

        let a = MonomialCoeffs::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(bernstein_root_exclusion(&a), RootExclusion::RootAtZero);

        let a = MonomialCoeffs::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(bernstein_root_exclusion(&a), RootExclusion::RootAtOne);

        let a = MonomialCoeffs::new(vec![0.0, 1.0, -1.0]).unwrap();
        assert_eq!(bernstein_root_exclusion(&a), RootExclusion::RootAtBoth);

        let a = MonomialCoeffs::new(vec![1.0, -3.0, 1.0]).unwrap();
        assert_eq!(bernstein_root_exclusion(&a), RootExclusion::Inconclusive);
    }

    #[test]
    fn lagrange_bound_values() {
        let a = MonomialCoeffs::new(vec![0.5, -1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(lagrange_root_lower_bound(&a).unwrap(), 0.25, epsilon = 1e-15);

        let a = MonomialCoeffs::new(vec![1.0, 0.3, 0.2]).unwrap();
        assert_abs_diff_eq!(lagrange_root_lower_bound(&a).unwrap(), 1.0, epsilon = 1e-15);

        let a = MonomialCoeffs::new(vec![0.0, 1.0]).unwrap();
        assert!(lagrange_root_lower_bound(&a).is_err());
    }

    #[test]
    fn lagrange_bound_endpoint_mix_is_small() {
        // p = (1/2) B_0^{(n)} + (1/2) B_n^{(n)} has Lagrange bound <= 1/n.
        for n in 2..=8 {
            let mut b = vec![0.0; n + 1];
            b[0] = 0.5;
            b[n] = 0.5;
            let a = bernstein_to_monomial(&BernsteinCoeffs::new(b).unwrap());
            let bound = lagrange_root_lower_bound(&a).unwrap();
            assert!(bound <= 1.0 / n as f64 + 1e-12, "n = {n}, bound = {bound}");
        }
    }

    #[test]
    fn cauchy_bound_values() {
        let a = MonomialCoeffs::new(vec![1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(cauchy_root_lower_bound(&a).unwrap(), 0.5, epsilon = 1e-15);

        let a = MonomialCoeffs::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(cauchy_root_lower_bound(&a).unwrap(), 1.0, epsilon = 1e-15);

        // Any positive ratio pushes the bound strictly inside [0, 1].
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let coeffs: Vec<f64> = std::iter::once(1.0)
                .chain((0..4).map(|_| rng.random_range(-1.0..1.0)))
                .collect();
            let a = MonomialCoeffs::new(coeffs).unwrap();
            if a.0[1..].iter().any(|&c| c > 0.0) {
                assert!(cauchy_root_lower_bound(&a).unwrap() < 1.0);
            }
        }
    }

    #[test]
    fn theorem_one_closure_class_nonnegative() {
        // Random members of the closure class: a_0 = 1, sum_{i>=1} |a_i| = 1.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..=24usize);
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm: f64 = raw.iter().map(|c| c.abs()).sum();
            let mut coeffs = vec![1.0];
            coeffs.extend(raw.iter().map(|c| c / norm));
            let a = MonomialCoeffs::new(coeffs).unwrap();
            let b = monomial_to_bernstein(&a);
            for v in &b.0 {
                assert!(*v >= -1e-12, "negative Bernstein coefficient {v} at n = {n}");
            }
        }
    }

    #[test]
    fn root_exclusion_sound_against_sign_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut certified = 0;
        while certified < 40 {
            let n = rng.random_range(1..=8usize);
            let coeffs: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = match MonomialCoeffs::new(coeffs) {
                Ok(a) => a,
                Err(_) => continue,
            };
            if bernstein_root_exclusion(&a) != RootExclusion::NoRootsInClosedInterval {
                continue;
            }
            certified += 1;
            let mut prev = a.eval(0.0);
            for i in 1..=10_000 {
                let x = i as f64 / 10_000.0;
                let v = a.eval(x);
                assert!(prev * v > 0.0, "sign change near x = {x}");
                assert!(v.abs() > 1e-12, "near-zero value at x = {x}");
                prev = v;
            }
        }
    }

    proptest! {
        #[test]
        fn prop_partition_of_unity(n in 0usize..=30, x in 0.0f64..=1.0) {
            let b = eval_bernstein_basis(n, x).unwrap();
            let sum: f64 = b.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-13);
            prop_assert!(b.iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn prop_conversion_roundtrip(coeffs in proptest::collection::vec(-3.0f64..3.0, 1..=13)) {
            let a = MonomialCoeffs::new(coeffs.clone()).unwrap();
            let back = bernstein_to_monomial(&monomial_to_bernstein(&a));
            let scale = coeffs.iter().fold(1.0f64, |m, c| m.max(c.abs()));
            for (orig, rt) in coeffs.iter().zip(&back.0) {
                prop_assert!((orig - rt).abs() <= 1e-10 * scale);
            }
        }
    }
}
