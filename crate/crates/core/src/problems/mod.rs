//! Test problems with reference-solution providers.

mod hires_constants;
mod reference;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use reference::{rk4, ExactReference, ReferenceSolution, RkReference};

/// Right-hand side `f(t, y)` written into the output slice.
pub type Rhs = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

/// Initial RK4 reference step before halving.
pub const REFERENCE_STEP: f64 = 1e-4;

/// An initial value problem `y' = f(t, y)`, `y(t0) = y0` on `[t0, t_end]`.
#[derive(Clone)]
pub struct OdeProblem {
    pub name: String,
    pub dim: usize,
    pub t0: f64,
    pub t_end: f64,
    pub y0: Vec<f64>,
    rhs: Rhs,
    reference: Option<Arc<dyn ReferenceSolution>>,
}

impl fmt::Debug for OdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("t0", &self.t0)
            .field("t_end", &self.t_end)
            .field("has_reference", &self.reference.is_some())
            .finish()
    }
}

impl OdeProblem {
    pub fn new(name: impl Into<String>, t0: f64, t_end: f64, y0: Vec<f64>, rhs: Rhs) -> Self {
        Self { name: name.into(), dim: y0.len(), t0, t_end, y0, rhs, reference: None }
    }

    pub fn with_reference(mut self, reference: Arc<dyn ReferenceSolution>) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn without_reference(mut self) -> Self {
        self.reference = None;
        self
    }

    /// Moves the end of the interval. Numerical references stay calibrated
    /// for the original interval.
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn eval_rhs(&self, t: f64, y: &[f64], out: &mut [f64]) {
        (self.rhs)(t, y, out)
    }

    pub fn rhs_at(&self, t: f64, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_rhs(t, y, &mut out);
        out
    }

    pub fn reference(&self) -> Result<&dyn ReferenceSolution> {
        self.reference
            .as_deref()
            .ok_or_else(|| Error::ReferenceUnavailable(self.name.clone()))
    }

    /// Central-difference Jacobian of the right-hand side at `(t, y)`.
    pub fn numerical_jacobian(&self, t: f64, y: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut jac = DMatrix::zeros(n, n);
        let mut yp = y.to_vec();
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        for col in 0..n {
            let h = 1e-6 * y[col].abs().max(1.0);
            yp[col] = y[col] + h;
            self.eval_rhs(t, &yp, &mut fp);
            yp[col] = y[col] - h;
            self.eval_rhs(t, &yp, &mut fm);
            yp[col] = y[col];
            for row in 0..n {
                jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        jac
    }
}

/// `y' = lambda y`, `y(0) = 1` on `[0, 1]`, with the exact solution as reference.
pub fn linear_scalar(lambda: f64) -> OdeProblem {
    let t0 = 0.0;
    let rhs: Rhs = Arc::new(move |_, y, out| out[0] = lambda * y[0]);
    OdeProblem::new(format!("linear({lambda})"), t0, 1.0, vec![1.0], rhs)
        .with_reference(Arc::new(ExactReference::new(move |t| vec![(lambda * (t - t0)).exp()])))
}

fn hires_rhs(_t: f64, y: &[f64], f: &mut [f64]) {
    use hires_constants::*;
    let reaction = K10 * y[5] * y[7];
    f[0] = -K1 * y[0] + K2 * y[1] + K3 * y[2] + K4;
    f[1] = K1 * y[0] - K5 * y[1];
    f[2] = -K6 * y[2] + K2 * y[3] + K7 * y[4];
    f[3] = K3 * y[1] + K1 * y[2] - K8 * y[3];
    f[4] = -K9 * y[4] + K2 * y[5] + K2 * y[6];
    f[5] = -reaction + K11 * y[3] + K1 * y[4] - K2 * y[5] + K11 * y[6];
    f[6] = reaction - K12 * y[6];
    f[7] = -reaction + K12 * y[6];
}

/// The 8-dimensional HIRES chemical kinetics system on `[0, 40]`.
pub fn hires() -> OdeProblem {
    use hires_constants::{T0, T_END, Y0};
    let rhs: Rhs = Arc::new(hires_rhs);
    let reference = RkReference::new(rhs.clone(), T0, Y0.to_vec(), T_END, REFERENCE_STEP);
    OdeProblem::new("hires", T0, T_END, Y0.to_vec(), rhs).with_reference(Arc::new(reference))
}

/// Default Burgers viscosity.
pub const BURGERS_MU: f64 = 0.005;
/// Default number of interior nodes (`dx = 1/501`).
pub const BURGERS_N: usize = 500;
const BURGERS_T_END: f64 = 2.5;

/// Central-difference semi-discretization of `u_t + (u^2/2)_x = mu u_xx` on
/// `[0, 1]` with homogeneous Dirichlet data and `u(x, 0) = 1.5 x (1 - x)^2`.
pub fn burgers_mol(mu: f64, n_interior: usize) -> Result<OdeProblem> {
    burgers_mol_with(mu, n_interior, true)
}

/// [`burgers_mol`] with the advection term optionally switched off.
pub fn burgers_mol_with(mu: f64, n_interior: usize, advection: bool) -> Result<OdeProblem> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidInput(format!("viscosity must be positive, got {mu}")));
    }
    if n_interior == 0 {
        return Err(Error::InvalidInput("need at least one interior node".into()));
    }
    let dx = 1.0 / (n_interior + 1) as f64;
    let diffusion = mu / (dx * dx);
    let convection = if advection { 1.0 / (4.0 * dx) } else { 0.0 };
    let rhs: Rhs = Arc::new(move |_, u, f| {
        let n = u.len();
        for i in 0..n {
            let left = if i == 0 { 0.0 } else { u[i - 1] };
            let right = if i + 1 == n { 0.0 } else { u[i + 1] };
            f[i] = -convection * (right * right - left * left) + diffusion * (right - 2.0 * u[i] + left);
        }
    });
    let y0: Vec<f64> = (1..=n_interior)
        .map(|i| {
            let x = i as f64 * dx;
            1.5 * x * (1.0 - x).powi(2)
        })
        .collect();
    let reference = RkReference::new(rhs.clone(), 0.0, y0.clone(), BURGERS_T_END, REFERENCE_STEP);
    let name = if advection { "burgers" } else { "burgers-diffusion" };
    Ok(OdeProblem::new(name, 0.0, BURGERS_T_END, y0, rhs).with_reference(Arc::new(reference)))
}

/// Options for selecting a problem by name.
#[derive(Debug, Clone)]
pub struct ProblemOptions {
    pub lambda: f64,
    pub mu: f64,
    pub n: usize,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        Self { lambda: -1.0, mu: BURGERS_MU, n: BURGERS_N }
    }
}

/// Looks up `linear`, `hires` or `burgers`.
pub fn by_name(name: &str, options: &ProblemOptions) -> Result<OdeProblem> {
    match name {
        "linear" => Ok(linear_scalar(options.lambda)),
        "hires" => Ok(hires()),
        "burgers" => burgers_mol(options.mu, options.n),
        other => Err(Error::InvalidInput(format!(
            "unknown problem `{other}` (expected linear, hires or burgers)"
        ))),
    }
}
