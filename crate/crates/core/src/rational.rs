//! The rational model `R = N / D` with a simplex-constrained Bernstein
//! denominator, its evaluation, and pole audits.

use crate::basis::{self, JacobiSpec, MonomialCoeffs};
use crate::error::{Error, Result};
use crate::linalg;
use serde::{Deserialize, Serialize};

/// Weights on the probability simplex: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    /// Normalizes nonnegative weights to unit sum. Entries below `-1e-12`
    /// or a vanishing total are rejected; tiny negative roundoff clamps to 0.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Degenerate("empty weight vector".into()));
        }
        let mut w = raw;
        for v in &mut w {
            if !v.is_finite() {
                return Err(Error::Domain("non-finite weight".into()));
            }
            if *v < 0.0 {
                if *v < -1e-12 {
                    return Err(Error::Domain(format!("negative simplex weight {v}")));
                }
                *v = 0.0;
            }
        }
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Degenerate("simplex weights sum to zero".into()));
        }
        for v in &mut w {
            *v /= sum;
        }
        Ok(Self(w))
    }

    /// Uniform weights `1/(M+1)` of length `m + 1`.
    pub fn uniform(degree: usize) -> Self {
        Self(vec![1.0 / (degree as f64 + 1.0); degree + 1])
    }

    /// Wraps weights that are simplex-valid by construction (multiplicative
    /// updates preserve the simplex exactly); skips renormalization so the
    /// raw update algebra stays observable.
    pub(crate) fn from_raw_unchecked(w: Vec<f64>) -> Self {
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn min(&self) -> f64 {
        self.0.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<usize> for SimplexWeights {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Rational model on [0, 1]: a shifted-Jacobi numerator over a Bernstein
/// denominator with simplex weights. Construction normalizes the weights and
/// rescales the numerator identically, so jointly rescaled inputs collapse to
/// one representation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalModel {
    pub basis: JacobiSpec,
    pub numerator: Vec<f64>,
    #[serde(rename = "denominator_weights")]
    pub denominator: SimplexWeights,
    pub domain: [f64; 2],
}

#[derive(Deserialize)]
struct RationalModelRaw {
    basis: JacobiSpec,
    numerator: Vec<f64>,
    denominator_weights: Vec<f64>,
    domain: [f64; 2],
}

impl<'de> Deserialize<'de> for RationalModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RationalModelRaw::deserialize(d)?;
        if raw.domain != [0.0, 1.0] {
            return Err(serde::de::Error::custom("domain must be [0.0, 1.0]"));
        }
        RationalModel::new(raw.basis, raw.numerator, raw.denominator_weights)
            .map_err(serde::de::Error::custom)
    }
}

impl RationalModel {
    /// Builds a model from raw (not necessarily normalized) nonnegative
    /// denominator weights. The normalization constant also divides the
    /// numerator so the represented function is unchanged.
    pub fn new(basis: JacobiSpec, numerator: Vec<f64>, raw_weights: Vec<f64>) -> Result<Self> {
        if numerator.is_empty() {
            return Err(Error::Degenerate("empty numerator".into()));
        }
        let mut clamped = raw_weights;
        for v in &mut clamped {
            if !v.is_finite() {
                return Err(Error::Domain("non-finite weight".into()));
            }
            if *v < 0.0 {
                if *v < -1e-12 {
                    return Err(Error::Domain(format!("negative simplex weight {v}")));
                }
                *v = 0.0;
            }
        }
        let sum: f64 = clamped.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Degenerate("simplex weights sum to zero".into()));
        }
        let denominator = SimplexWeights(clamped.into_iter().map(|w| w / sum).collect());
        let numerator = numerator.into_iter().map(|a| a / sum).collect();
        Ok(Self {
            basis,
            numerator,
            denominator,
            domain: [0.0, 1.0],
        })
    }

    /// Builds a model from weights already on the simplex.
    pub fn from_simplex(basis: JacobiSpec, numerator: Vec<f64>, weights: SimplexWeights) -> Self {
        Self {
            basis,
            numerator,
            denominator: weights,
            domain: [0.0, 1.0],
        }
    }

    pub fn num_degree(&self) -> usize {
        self.numerator.len() - 1
    }

    pub fn den_degree(&self) -> usize {
        self.denominator.degree()
    }

    pub fn numerator_at(&self, x: f64) -> Result<f64> {
        let p = basis::eval_jacobi_basis(self.basis, self.num_degree(), x)?;
        Ok(self.numerator.iter().zip(&p).map(|(a, v)| a * v).sum())
    }

    pub fn denominator_at(&self, x: f64) -> Result<f64> {
        let b = basis::eval_bernstein_basis(self.den_degree(), x)?;
        Ok(self
            .denominator
            .as_slice()
            .iter()
            .zip(&b)
            .map(|(w, v)| w * v)
            .sum())
    }

    /// Evaluates `N(x)/D(x)`. A denominator of exactly zero (possible only at
    /// an endpoint whose weight vanishes) is a pole error.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let den = self.denominator_at(x)?;
        if den == 0.0 {
            return Err(Error::Pole { x });
        }
        Ok(self.numerator_at(x)? / den)
    }

    /// Minimum of the denominator over the default certificate grid.
    pub fn denominator_min_default(&self) -> Result<f64> {
        self.denominator_min(DENOMINATOR_MIN_GRID)
    }

    /// Minimum of the denominator over a uniform grid including endpoints.
    pub fn denominator_min(&self, grid_size: usize) -> Result<f64> {
        if grid_size < 2 {
            return Err(Error::Config("grid_size must be at least 2".into()));
        }
        let mut min = f64::INFINITY;
        for i in 0..grid_size {
            let x = i as f64 / (grid_size - 1) as f64;
            min = min.min(self.denominator_at(x)?);
        }
        Ok(min)
    }
}

/// Default certificate-refinement grid for `denominator_min`.
pub const DENOMINATOR_MIN_GRID: usize = 4097;

/// How a pole audit reached its verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleAuditMethod {
    BernsteinCertificate,
    Eigenvalue,
    GridScan,
}

/// Result of checking a rational function for poles inside [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleAudit {
    pub has_pole_in_interval: bool,
    pub pole_locations: Vec<f64>,
    /// Parallel to `pole_locations`: true when the numerator also vanishes
    /// there (a removable singularity, reported for AAA cleanup comparisons).
    pub removable: Vec<bool>,
    pub method: PoleAuditMethod,
}

impl PoleAudit {
    pub fn clean(method: PoleAuditMethod) -> Self {
        Self {
            has_pole_in_interval: false,
            pole_locations: Vec::new(),
            removable: Vec::new(),
            method,
        }
    }
}

/// Numerator/denominator roots closer than this coincide (removable).
const REMOVABLE_TOL: f64 = 1e-9;

/// Locates real denominator roots in [0, 1] via companion-matrix
/// eigenvalues refined by bisection, falling back to a 10^4-point sign scan
/// if the eigenvalue solve fails. Roots shared with the numerator are
/// reported but flagged removable.
pub fn audit_poles(numerator: &MonomialCoeffs, denominator: &MonomialCoeffs) -> Result<PoleAudit> {
    let den_scale = denominator.0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if den_scale == 0.0 {
        return Err(Error::Degenerate("denominator is identically zero".into()));
    }

    let (mut roots, method) = match linalg::polynomial_roots(&denominator.0) {
        Ok(eigs) => {
            let real_roots: Vec<f64> = eigs
                .iter()
                .filter(|c| c.im.abs() <= 1e-8 * c.re.abs().max(1.0))
                .map(|c| c.re)
                .filter(|&r| (-1e-9..=1.0 + 1e-9).contains(&r))
                .map(|r| r.clamp(0.0, 1.0))
                .collect();
            (real_roots, PoleAuditMethod::Eigenvalue)
        }
        Err(_) => (sign_scan_roots(denominator), PoleAuditMethod::GridScan),
    };

    // Refine by bisection where a sign change brackets the root.
    for r in roots.iter_mut() {
        if let Some(refined) = bisect_refine(denominator, *r) {
            *r = refined;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-10);

    let removable: Vec<bool> = roots
        .iter()
        .map(|&r| numerator_vanishes_near(numerator, r))
        .collect();
    Ok(PoleAudit {
        has_pole_in_interval: !roots.is_empty(),
        pole_locations: roots,
        removable,
        method,
    })
}

fn numerator_vanishes_near(numerator: &MonomialCoeffs, root: f64) -> bool {
    match linalg::polynomial_roots(&numerator.0) {
        Ok(roots) => roots
            .iter()
            .any(|c| c.im.abs() < REMOVABLE_TOL && (c.re - root).abs() < REMOVABLE_TOL),
        Err(_) => false,
    }
}

fn sign_scan_roots(p: &MonomialCoeffs) -> Vec<f64> {
    let n = 10_000;
    let mut roots = Vec::new();
    let mut prev = p.eval(0.0);
    if prev == 0.0 {
        roots.push(0.0);
    }
    for i in 1..=n {
        let x = i as f64 / n as f64;
        let v = p.eval(x);
        if v == 0.0 {
            roots.push(x);
        } else if prev * v < 0.0 {
            roots.push(x - 0.5 / n as f64);
        }
        prev = v;
    }
    roots
}

fn bisect_refine(p: &MonomialCoeffs, approx: f64) -> Option<f64> {
    let h = 1e-4;
    let mut lo = (approx - h).max(0.0);
    let mut hi = (approx + h).min(1.0);
    let (flo, fhi) = (p.eval(lo), p.eval(hi));
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo * fhi > 0.0 {
        return None;
    }
    let mut flo = flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = p.eval(mid);
        if fm == 0.0 || hi - lo < 1e-15 {
            return Some(mid);
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Structural audit of a fitted Bernstein-denominator model: positive weights
/// certify a pole-free closed interval; an endpoint weight of zero puts a pole
/// at that endpoint (removable when the numerator also vanishes there).
pub fn audit_model(model: &RationalModel) -> PoleAudit {
    let w = model.denominator.as_slice();
    let m = model.den_degree();
    let mut locations = Vec::new();
    if w[0] <= 0.0 {
        locations.push(0.0);
    }
    if w[m] <= 0.0 {
        locations.push(1.0);
    }
    let removable = locations
        .iter()
        .map(|&x| model.numerator_at(x).map(|v| v.abs() < REMOVABLE_TOL).unwrap_or(false))
        .collect();
    PoleAudit {
        has_pole_in_interval: !locations.is_empty(),
        pole_locations: locations,
        removable,
        method: PoleAuditMethod::BernsteinCertificate,
    }
}
