//! Explicit Adams-type linear multistep methods with long real stability intervals.
//!
//! - [`polycore`]: generating polynomials, the root-locus map and characteristic roots.
//! - [`synth`]: the closed-form first-order family, damping, and the constrained
//!   optimizer for higher orders.
//! - [`stability`]: locus tracing, the root condition, interval measurement, error constants.
//! - [`integrate`]: fixed-step integration and convergence studies.
//! - [`problems`]: the linear test equation, HIRES and a Burgers method-of-lines system.
//! - [`tables`]: regenerates the coefficient, damping and error-constant tables.
//! - [`cli`]: the `stab-adams` command-line front end.

pub mod cli;
pub mod error;
pub mod integrate;
pub mod plot;
pub mod polycore;
pub mod problems;
pub mod stability;
pub mod synth;
pub mod tables;

pub use error::{Error, Result};
pub use polycore::{AdamsCoefficients, ComplexPoint};
pub use synth::MethodSpec;
