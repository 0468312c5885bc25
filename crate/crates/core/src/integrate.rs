//! Fixed-step integration with explicit Adams-type methods and convergence studies.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::plot::{Plot, Series};
use crate::problems::OdeProblem;
use crate::synth::json::sig17;
use crate::synth::MethodSpec;

/// A run is declared diverged once the state norm exceeds this multiple of the initial norm.
pub const DIVERGENCE_FACTOR: f64 = 1e10;
/// Errors below this multiple of the reference accuracy are excluded from order fits.
pub const NOISE_FLOOR_FACTOR: f64 = 100.0;
/// A run is "bounded" if its peak norm stays below this multiple of the starting-value peak.
pub const BOUNDED_FACTOR: f64 = 10.0;
/// Endpoint errors above this fraction of the reference solution's max-norm count as unusable.
pub const STABLE_RELATIVE_ERROR: f64 = 1e-2;

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Starting values `y_0..y_{k-1}` on the grid and `f` evaluated at each.
#[derive(Debug, Clone)]
pub struct StartingValues {
    pub states: Vec<Vec<f64>>,
    pub derivatives: Vec<Vec<f64>>,
}

/// Takes the first `k` grid values from the problem's reference solution.
pub fn step_history_init(problem: &OdeProblem, method: &MethodSpec, tau: f64) -> Result<StartingValues> {
    let k = method.k;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!("step size must be positive, got {tau}")));
    }
    if tau * (k as f64 - 1.0) >= problem.t_end - problem.t0 {
        return Err(Error::InvalidInput(format!(
            "{k} starting values with tau = {tau} do not fit in [{}, {}]",
            problem.t0, problem.t_end
        )));
    }
    let reference = problem.reference()?;
    let states: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            if j == 0 {
                problem.y0.clone()
            } else {
                reference.state_at(problem.t0 + j as f64 * tau)
            }
        })
        .collect();
    let derivatives = states
        .iter()
        .enumerate()
        .map(|(j, y)| problem.rhs_at(problem.t0 + j as f64 * tau, y))
        .collect();
    Ok(StartingValues { states, derivatives })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// The state became non-finite or blew up at this multistep step.
    Diverged { step: usize },
}

impl RunStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, RunStatus::Ok)
    }

    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Ok => "OK",
            RunStatus::Diverged { .. } => "DIVERGED",
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationRun {
    pub method: MethodSpec,
    pub tau: f64,
    /// Multistep steps taken.
    pub steps: usize,
    /// Last finite state (the state at `t_end` when `status` is `Ok`).
    pub endpoint: Vec<f64>,
    /// Right-hand side evaluations made by the multistep recurrence.
    pub f_evals: usize,
    /// Right-hand side evaluations spent on the starting values.
    pub starter_f_evals: usize,
    pub status: RunStatus,
    /// Largest state max-norm over the whole run.
    pub peak_norm: f64,
    /// Largest max-norm among the starting values.
    pub start_norm: f64,
}

impl IntegrationRun {
    /// Peak norm within [`BOUNDED_FACTOR`] of the starting values' peak.
    pub fn is_bounded(&self) -> bool {
        self.status.is_ok() && self.peak_norm <= BOUNDED_FACTOR * self.start_norm
    }
}

/// Number of uniform steps of size `tau` covering the problem interval.
pub fn grid_steps(problem: &OdeProblem, tau: f64) -> Result<usize> {
    let span = problem.t_end - problem.t0;
    let n = (span / tau).round();
    if !(tau > 0.0) || n < 1.0 || (n * tau - span).abs() > 1e-12 * span.abs() {
        return Err(Error::InvalidInput(format!(
            "tau = {tau} does not divide the interval length {span}"
        )));
    }
    Ok(n as usize)
}

/// Strictly decreasing step sizes `span / n` with `n` growing geometrically from `first_steps`
/// by a factor of two every `per_doubling` entries (duplicates after rounding are dropped).
pub fn step_grid(span: f64, first_steps: usize, count: usize, per_doubling: usize) -> Vec<f64> {
    let mut steps: Vec<usize> = (0..count)
        .map(|i| (first_steps as f64 * 2f64.powf(i as f64 / per_doubling.max(1) as f64)).round() as usize)
        .collect();
    steps.dedup();
    steps.into_iter().map(|n| span / n as f64).collect()
}

/// Integrates over the whole problem interval with constant step `tau`.
pub fn run_fixed(problem: &OdeProblem, method: &MethodSpec, tau: f64) -> Result<IntegrationRun> {
    let n = grid_steps(problem, tau)?;
    let start = step_history_init(problem, method, tau)?;
    Ok(advance(problem, method, tau, n, start))
}

fn advance(problem: &OdeProblem, method: &MethodSpec, tau: f64, n: usize, start: StartingValues) -> IntegrationRun {
    let k = method.k;
    let dim = problem.dim;
    let beta = method.beta();
    let starter_f_evals = k;

    let start_norm = start.states.iter().map(|y| max_norm(y)).fold(0.0, f64::max);
    let blow_up = DIVERGENCE_FACTOR * max_norm(&problem.y0).max(f64::MIN_POSITIVE);

    // ring buffer of the last k derivatives; slot (head + j) % k holds f_{m+j}
    let mut history = start.derivatives;
    let mut head = 0;
    let mut y = start.states.last().cloned().expect("k >= 1");
    let mut next = vec![0.0; dim];
    let mut increment = vec![0.0; dim];
    let mut peak_norm = start_norm;
    let mut status = RunStatus::Ok;
    let mut steps = 0;

    for m in 0..(n + 1 - k) {
        increment.iter_mut().for_each(|v| *v = 0.0);
        for (j, b) in beta.iter().enumerate() {
            let f = &history[(head + j) % k];
            for d in 0..dim {
                increment[d] += b * f[d];
            }
        }
        for d in 0..dim {
            next[d] = y[d] + tau * increment[d];
        }
        let norm = max_norm(&next);
        if !norm.is_finite() || norm > blow_up {
            status = RunStatus::Diverged { step: m };
            break;
        }
        peak_norm = peak_norm.max(norm);
        std::mem::swap(&mut y, &mut next);
        let t = problem.t0 + (m + k) as f64 * tau;
        problem.eval_rhs(t, &y, &mut history[head]);
        head = (head + 1) % k;
        steps += 1;
    }

    IntegrationRun {
        method: method.clone(),
        tau,
        steps,
        endpoint: y,
        f_evals: steps,
        starter_f_evals,
        status,
        peak_norm,
        start_norm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub tau: f64,
    /// Max-norm endpoint error; infinite for diverged runs.
    pub error: f64,
    pub status: RunStatus,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub problem: String,
    pub points: Vec<ConvergencePoint>,
    /// Max-norm of the reference endpoint.
    pub reference_norm: f64,
    /// Least-squares slope of `log(error)` against `log(tau)`.
    pub observed_order: Option<f64>,
}

impl ConvergenceReport {
    pub fn taus(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.tau).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.error).collect()
    }

    /// Largest step size from which every smaller step in the study finishes with an endpoint
    /// error of at most `relative_error` times the reference norm.
    pub fn max_stable_tau(&self, relative_error: f64) -> Option<f64> {
        let cap = relative_error * self.reference_norm;
        self.points
            .iter()
            .rev()
            .take_while(|p| p.status.is_ok() && p.error <= cap)
            .last()
            .map(|p| p.tau)
    }

    pub fn all_diverged(&self) -> bool {
        self.points.iter().all(|p| !p.status.is_ok())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,error,status\n");
        for p in &self.points {
            let error = if p.error.is_finite() { sig17(p.error) } else { "inf".to_string() };
            let _ = writeln!(out, "{},{},{}", sig17(p.tau), error, p.status.label());
        }
        out
    }

    pub fn to_svg(&self, label: &str) -> String {
        let pts = self
            .points
            .iter()
            .map(|p| (p.tau, if p.status.is_ok() { p.error } else { f64::NAN }))
            .collect();
        Plot::new(&format!("Endpoint error, {}", self.problem), "tau", "max-norm error")
            .log_log()
            .series(Series::line(label, pts).with_markers())
            .to_svg()
    }
}

/// Least-squares slope through `(ln x, ln y)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs [`run_fixed`] for each step size (in parallel) and fits the observed order
/// on the contiguous tail of stable runs whose errors sit above the reference noise floor.
pub fn converge_study(problem: &OdeProblem, method: &MethodSpec, taus: &[f64]) -> Result<ConvergenceReport> {
    if taus.is_empty() {
        return Err(Error::InvalidInput("no step sizes given".into()));
    }
    if taus.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("step sizes must be strictly decreasing".into()));
    }
    for &tau in taus {
        grid_steps(problem, tau)?;
    }
    let reference = problem.reference()?;
    let exact = reference.state_at(problem.t_end);
    let floor = NOISE_FLOOR_FACTOR * reference.accuracy();

    let points = taus
        .par_iter()
        .map(|&tau| {
            let run = run_fixed(problem, method, tau)?;
            let error = if run.status.is_ok() {
                run.endpoint.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            Ok(ConvergencePoint { tau, error, status: run.status })
        })
        .collect::<Result<Vec<_>>>()?;

    let tail: Vec<(f64, f64)> = points
        .iter()
        .rev()
        .take_while(|p| p.status.is_ok() && p.error.is_finite())
        .filter(|p| p.error >= floor)
        .map(|p| (p.tau, p.error))
        .collect();
    let observed_order = if tail.len() >= 3 { log_log_slope(&tail) } else { None };

    Ok(ConvergenceReport { problem: problem.name.clone(), points, reference_norm: max_norm(&exact), observed_order })
}
