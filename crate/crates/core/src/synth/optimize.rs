//! Multi-start Lagrange-Newton solver for
//!
//! ```text
//! minimize |b|^2  subject to  G_q(T(b)) = 0,  q = 1..p
//! ```
//!
//! Each `G_q(T(b))` is a quadratic form in `b`. `G_1(T(b)) = (sum b)^2 - 1`
//! is imposed as `sum b = 1`, which also fixes the sign ambiguity `b ~ -b`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{map_t, order_residuals, residual_tolerance, BVector, MethodSpec};
use crate::error::{Error, Result};
use crate::polycore::eval_nu;
use crate::stability;

/// Number of grid points on `(0, pi)` used for the a-posteriori feasibility check.
pub const FEASIBILITY_GRID: usize = 2048;
/// Smallest admissible `nu(phi)` on the feasibility grid.
pub const FEASIBILITY_TOL: f64 = -1e-9;
/// Largest admissible first-order KKT residual of an accepted point.
pub const KKT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    pub attempts: usize,
    pub seed: u64,
    /// Newton iterations allowed per attempt.
    pub max_iterations: usize,
    /// Standard deviation of the Gaussian perturbation of the `b_j = 1/k` start.
    pub perturbation: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { attempts: 64, seed: 0, max_iterations: 200, perturbation: 0.5 }
    }
}

/// The selected KKT point and its certificate.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub method: MethodSpec,
    pub b: BVector,
    pub multipliers: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    /// Index of the attempt that produced the selected point.
    pub attempt: usize,
    /// How many attempts reached an admissible KKT point.
    pub converged_attempts: usize,
}

/// The order conditions as functions of `b`.
///
/// Row 0 is the linear `sum b - 1`; row `q-1` for `q >= 2` is `b^T M_q b - 1/q`.
#[derive(Debug, Clone)]
pub struct QuadraticConstraints {
    k: usize,
    p: usize,
    forms: Vec<DMatrix<f64>>,
}

/// Symmetric matrices `A_j` with `beta_j = b^T A_j b` for `beta = T(b)`.
pub fn beta_forms(k: usize) -> Vec<DMatrix<f64>> {
    // a_tilde_i = b^T At_i b: lag-(k-1-i) autocorrelation doubled, or |b|^2 for i = k-1
    let a_tilde: Vec<DMatrix<f64>> = (0..k)
        .map(|i| {
            if i + 1 == k {
                DMatrix::identity(k, k)
            } else {
                let lag = k - 1 - i;
                DMatrix::from_fn(k, k, |r, c| if r.abs_diff(c) == lag { 1.0 } else { 0.0 })
            }
        })
        .collect();
    let zero = DMatrix::zeros(k, k);
    (0..k)
        .map(|j| {
            let prev = if j == 0 { &zero } else { &a_tilde[j - 1] };
            if j + 1 == k {
                &a_tilde[j] + prev * 0.5
            } else {
                (prev + &a_tilde[j]) * 0.5
            }
        })
        .collect()
}

impl QuadraticConstraints {
    pub fn new(k: usize, p: usize) -> Self {
        let betas = beta_forms(k);
        let forms = (2..=p)
            .map(|q| {
                betas.iter().enumerate().fold(DMatrix::zeros(k, k), |acc, (j, a)| {
                    acc + a * (j as f64 + 1.0 - k as f64).powi(q as i32 - 1)
                })
            })
            .collect();
        Self { k, p, forms }
    }

    pub fn values(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut c = DVector::zeros(self.p);
        c[0] = b.sum() - 1.0;
        for (i, m) in self.forms.iter().enumerate() {
            let q = i + 2;
            c[q - 1] = b.dot(&(m * b)) - 1.0 / q as f64;
        }
        c
    }

    /// `p x k` Jacobian of [`values`](Self::values).
    pub fn jacobian(&self, b: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.p, self.k);
        jac.row_mut(0).fill(1.0);
        for (i, m) in self.forms.iter().enumerate() {
            let grad = m * b * 2.0;
            jac.row_mut(i + 1).copy_from(&grad.transpose());
        }
        jac
    }

    /// Hessian of the Lagrangian `|b|^2/2 - lambda . c(b)`.
    fn lagrangian_hessian(&self, lambda: &DVector<f64>) -> DMatrix<f64> {
        let mut h = DMatrix::identity(self.k, self.k);
        for (i, m) in self.forms.iter().enumerate() {
            h -= m * (2.0 * lambda[i + 1]);
        }
        h
    }
}

fn solve(matrix: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    match matrix.clone().lu().solve(rhs) {
        Some(x) if x.iter().all(|v| v.is_finite()) => Some(x),
        _ => matrix.svd(true, true).solve(rhs, 1e-14).ok(),
    }
}

struct Candidate {
    b: DVector<f64>,
    lambda: DVector<f64>,
    kkt_residual: f64,
}

fn stationarity(b: &DVector<f64>, jac: &DMatrix<f64>, lambda: &DVector<f64>) -> DVector<f64> {
    b - jac.transpose() * lambda
}

/// One Newton run from `b`. Returns the point if it is a KKT point to `KKT_TOL`.
fn newton_attempt(cons: &QuadraticConstraints, mut b: DVector<f64>, max_iterations: usize) -> Option<Candidate> {
    let (k, p) = (cons.k, cons.p);
    let mut iterations = 0;

    // Feasibility: minimum-norm Gauss-Newton steps onto c(b) = 0.
    loop {
        let c = cons.values(&b);
        let norm = c.amax();
        if norm <= 1e-14 || iterations >= max_iterations {
            break;
        }
        let jac = cons.jacobian(&b);
        let dual = solve(&jac * jac.transpose(), &c)?;
        let step = -(jac.transpose() * dual);
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let trial = &b + &step * alpha;
            if cons.values(&trial).amax() < norm {
                b = trial;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        iterations += 1;
        if !improved {
            break;
        }
    }
    if cons.values(&b).amax() > 1e-6 {
        return None;
    }

    let jac = cons.jacobian(&b);
    let mut lambda = solve(&jac * jac.transpose(), &(&jac * &b))?;

    let kkt = |b: &DVector<f64>, lambda: &DVector<f64>| -> DVector<f64> {
        let jac = cons.jacobian(b);
        let mut f = DVector::zeros(k + p);
        f.rows_mut(0, k).copy_from(&stationarity(b, &jac, lambda));
        f.rows_mut(k, p).copy_from(&cons.values(b));
        f
    };

    let mut f = kkt(&b, &lambda);
    while iterations < max_iterations {
        let norm = f.norm();
        if norm <= 1e-15 {
            break;
        }
        let jac = cons.jacobian(&b);
        let mut system = DMatrix::zeros(k + p, k + p);
        system.view_mut((0, 0), (k, k)).copy_from(&cons.lagrangian_hessian(&lambda));
        system.view_mut((0, k), (k, p)).copy_from(&(-jac.transpose()));
        system.view_mut((k, 0), (p, k)).copy_from(&jac);
        let step = solve(system, &(-&f))?;

        let mut accepted = false;
        let mut alpha = 1.0;
        for _ in 0..40 {
            let trial_b = &b + step.rows(0, k) * alpha;
            let trial_lambda = &lambda + step.rows(k, p) * alpha;
            let trial_f = kkt(&trial_b, &trial_lambda);
            if trial_f.norm() < norm * (1.0 - 1e-4 * alpha) {
                b = trial_b;
                lambda = trial_lambda;
                f = trial_f;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        iterations += 1;
        if !accepted || step.amax() <= 1e-16 * (1.0 + b.amax()) {
            break;
        }
    }

    let jac = cons.jacobian(&b);
    let kkt_residual = stationarity(&b, &jac, &lambda).amax();
    if kkt_residual <= KKT_TOL && b.iter().all(|v| v.is_finite()) {
        Some(Candidate { b, lambda, kkt_residual })
    } else {
        None
    }
}

/// Minimum of `nu(phi)` over the feasibility grid.
pub fn min_nu_on_grid(coeffs: &crate::polycore::AdamsCoefficients) -> f64 {
    (1..=FEASIBILITY_GRID)
        .map(|i| eval_nu(coeffs, PI * i as f64 / (FEASIBILITY_GRID + 1) as f64))
        .fold(f64::INFINITY, f64::min)
}

struct Accepted {
    candidate: Candidate,
    beta: crate::polycore::AdamsCoefficients,
    objective: f64,
    ell_discrepancy: f64,
}

fn admit(candidate: Candidate, p: usize) -> Option<Accepted> {
    let b = BVector::new(candidate.b.iter().copied().collect()).ok()?;
    let beta = map_t(&b);
    let residuals = order_residuals(&beta, p);
    let orders_hold = residuals
        .iter()
        .enumerate()
        .all(|(i, r)| r.abs() <= residual_tolerance(&beta, i + 1));
    if !orders_hold || min_nu_on_grid(&beta) < FEASIBILITY_TOL {
        return None;
    }
    let objective = b.norm_squared();
    let ell_discrepancy = (2.0 / objective - stability::ell_formula(&beta)).abs();
    Some(Accepted { candidate, beta, objective, ell_discrepancy })
}

/// Synthesizes the `k`-step method of order `p` with the longest stability interval.
pub fn optimize(k: usize, p: usize, attempts: usize) -> Result<MethodSpec> {
    let options = OptimizeOptions { attempts, ..OptimizeOptions::default() };
    optimize_with(k, p, &options).map(|outcome| outcome.method)
}

/// [`optimize`] with explicit options, returning the KKT certificate as well.
///
/// Accepts `1 <= p <= k`; `p = 1` reproduces the closed-form first-order family.
pub fn optimize_with(k: usize, p: usize, options: &OptimizeOptions) -> Result<OptimizeOutcome> {
    if k == 0 || p == 0 || p > k {
        return Err(Error::InvalidInput(format!("need 1 <= p <= k, got k = {k}, p = {p}")));
    }
    if options.attempts == 0 {
        return Err(Error::InvalidInput("at least one attempt is required".into()));
    }
    let cons = QuadraticConstraints::new(k, p);
    let noise = Normal::new(0.0, options.perturbation)
        .map_err(|e| Error::InvalidInput(format!("perturbation: {e}")))?;

    let results: Vec<Option<Accepted>> = (0..options.attempts)
        .into_par_iter()
        .map(|attempt| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(attempt as u64);
            let start = DVector::from_fn(k, |_, _| {
                let base = 1.0 / k as f64;
                if attempt == 0 {
                    base
                } else {
                    base + noise.sample(&mut rng)
                }
            });
            newton_attempt(&cons, start, options.max_iterations).and_then(|c| admit(c, p))
        })
        .collect();

    let converged_attempts = results.iter().filter(|r| r.is_some()).count();
    let mut best: Option<(usize, Accepted)> = None;
    for (attempt, result) in results.into_iter().enumerate() {
        let Some(accepted) = result else { continue };
        let better = match &best {
            None => true,
            Some((_, current)) => {
                if (accepted.objective - current.objective).abs() <= 1e-12 {
                    accepted.ell_discrepancy < current.ell_discrepancy
                } else {
                    accepted.objective < current.objective
                }
            }
        };
        if better {
            best = Some((attempt, accepted));
        }
    }

    let (attempt, accepted) = best.ok_or(Error::NotConverged { k, p, attempts: options.attempts })?;
    let method = MethodSpec::from_coefficients(accepted.beta, p, 0.0)?;
    Ok(OptimizeOutcome {
        method,
        b: BVector::new(accepted.candidate.b.iter().copied().collect())?,
        multipliers: accepted.candidate.lambda.iter().copied().collect(),
        objective: accepted.objective,
        kkt_residual: accepted.candidate.kkt_residual,
        attempt,
        converged_attempts,
    })
}
