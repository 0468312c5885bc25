use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by method synthesis, analysis and integration.
#[derive(Debug, Error)]
pub enum Error {
    /// `sigma(zeta)` vanished (numerically) at the evaluation point.
    #[error("sigma has a root at zeta = {zeta}: |sigma(zeta)| = {magnitude:e}")]
    Pole { zeta: Complex64, magnitude: f64 },

    #[error("characteristic polynomial is degenerate (vanishing leading coefficient)")]
    Degenerate,

    /// The coefficients do not satisfy the order conditions a computation relies on.
    #[error("order conditions violated: |G_{order}| = {residual:e}")]
    OrderViolation { order: usize, residual: f64 },

    #[error("NOT CONVERGED: no feasible ({k},{p}) method found after {attempts} attempts")]
    NotConverged { k: usize, p: usize, attempts: usize },

    #[error("problem `{0}` has no reference solution")]
    ReferenceUnavailable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
