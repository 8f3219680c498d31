use thiserror::Error;

/// Errors produced by the approximation and spectral routines.
#[derive(Error, Debug)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("denominator vanishes at x = {x}")]
    Pole { x: f64 },

    #[error("simplex step size {eta} exceeds the admissible maximum {eta_max}")]
    Step { eta: f64, eta_max: f64 },

    #[error("penalty weight n^n overflows f64 for degree {degree} (max 120)")]
    PenaltyOverflow { degree: usize },

    #[error("iteration diverged: {0}")]
    Divergence(String),

    #[error("denominator not strictly positive at collocation node {index} (value {value})")]
    Positivity { index: usize, value: f64 },

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("linear algebra failure: {0}")]
    Solver(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: {0}")]
    Mismatch(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
