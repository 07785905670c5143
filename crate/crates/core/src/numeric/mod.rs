//! Dense linear algebra and randomness used across the toolkit.

mod eig;
mod lex;
mod matrix;
mod rng;

pub use eig::{sym_eig, EigenDecomposition, DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS};
pub use lex::{lex_rank_rows, TieBlocks, DEFAULT_TAU_LEX};
pub use matrix::{dot, norm2, Matrix};
pub use rng::Rng;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("Jacobi iteration did not converge in {sweeps} sweeps (off-diagonal norm {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("non-finite entry")]
    NonFinite,
    #[error("need at least two values, got {0}")]
    TooFewValues(usize),
}

/// Smallest gap between consecutive ascending values, divided by the mean gap
/// `(λ_max − λ_min) / (len − 1)`. Zero when all values coincide.
pub fn min_normalized_spacing(values: &[f64]) -> Result<f64, NumericError> {
    if values.len() < 2 {
        return Err(NumericError::TooFewValues(values.len()));
    }
    let lo = values[0];
    let hi = values[values.len() - 1];
    if hi == lo {
        return Ok(0.0);
    }
    let mean_gap = (hi - lo) / (values.len() - 1) as f64;
    let min_gap = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    Ok(min_gap / mean_gap)
}
