//! Shared inputs for the criterion benchmarks.

use polefree::fitting::Dataset;

/// Noiseless arctan ridge on the uniform grid, the standard hard univariate
/// target.
pub fn arctan_dataset(n: usize) -> Dataset {
    Dataset::from_grid(n, |x| (50.0 * (x - 0.5)).atan())
}

/// Smooth oscillatory target.
pub fn expsin_dataset(n: usize) -> Dataset {
    Dataset::from_grid(n, |x| (-x).exp() * (16.0 * x * x).sin())
}
