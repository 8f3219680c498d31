//! Pole-free rational function approximation on [0, 1].
//!
//! The denominator is a Bernstein-basis polynomial whose weights live on the
//! probability simplex, so it is strictly positive wherever a weight is
//! positive and the fitted rational function cannot acquire poles inside the
//! approximation interval. The crate provides:
//!
//! - [`basis`]: Bernstein / shifted-Jacobi evaluation, coefficient
//!   conversions, and root-bound diagnostics.
//! - [`rational`]: the rational model, its evaluation, and pole audits.
//! - [`fitting`]: linearized / reweighted / nonlinear residuals, the
//!   Sobolev-Jacobi smoothing penalty, the simplex-constrained optimizer
//!   with hot-start, the SK baseline, and cross-validation.
//! - [`baselines`]: the AAA barycentric fitter and its pole computation.
//! - [`multivariate`]: tensor-product rational models on the unit hypercube.
//! - [`spectral`]: Chebyshev collocation for two Bessel eigenproblems,
//!   comparing polynomial and rational coefficient approximations.
//! - [`bench`]: experiment dataset generators, metrics, and study runners.

pub mod basis;
pub mod baselines;
pub mod bench;
pub mod error;
pub mod fitting;
pub mod linalg;
pub mod multivariate;
pub mod rational;
pub mod spectral;

pub use basis::{BernsteinCoeffs, JacobiSpec, MonomialCoeffs};
pub use error::{Error, Result};
pub use fitting::{Dataset, FitConfig, FitReport, HotStartSource, LossKind};
pub use rational::{PoleAudit, PoleAuditMethod, RationalModel, SimplexWeights};
