use std::sync::OnceLock;

use super::Rhs;

/// Supplies states of the exact (or accurately computed) solution.
pub trait ReferenceSolution: Send + Sync {
    fn state_at(&self, t: f64) -> Vec<f64>;
    /// Max-norm accuracy of the returned states.
    fn accuracy(&self) -> f64;
}

/// A closed-form solution.
pub struct ExactReference<F> {
    solution: F,
}

impl<F> ExactReference<F>
where
    F: Fn(f64) -> Vec<f64> + Send + Sync,
{
    pub fn new(solution: F) -> Self {
        Self { solution }
    }
}

impl<F> ReferenceSolution for ExactReference<F>
where
    F: Fn(f64) -> Vec<f64> + Send + Sync,
{
    fn state_at(&self, t: f64) -> Vec<f64> {
        (self.solution)(t)
    }

    fn accuracy(&self) -> f64 {
        1e-15
    }
}

#[derive(Debug, Clone)]
struct Calibration {
    step: f64,
    endpoint: Vec<f64>,
    /// Endpoint change under the last step halving.
    halving_difference: f64,
}

/// Classical RK4 reference whose step is halved until the endpoint of the
/// interval changes by less than `tolerance` under halving.
pub struct RkReference {
    rhs: Rhs,
    t0: f64,
    y0: Vec<f64>,
    horizon: f64,
    initial_step: f64,
    tolerance: f64,
    max_halvings: usize,
    calibration: OnceLock<Calibration>,
}

impl RkReference {
    pub fn new(rhs: Rhs, t0: f64, y0: Vec<f64>, horizon: f64, initial_step: f64) -> Self {
        Self {
            rhs,
            t0,
            y0,
            horizon,
            initial_step,
            tolerance: 1e-10,
            max_halvings: 8,
            calibration: OnceLock::new(),
        }
    }

    fn calibrated(&self) -> &Calibration {
        self.calibration.get_or_init(|| {
            let mut step = self.initial_step;
            let mut coarse = self.integrate(self.horizon, step);
            let mut difference = f64::INFINITY;
            for _ in 0..self.max_halvings {
                let fine = self.integrate(self.horizon, step / 2.0);
                difference = max_diff(&coarse, &fine);
                step /= 2.0;
                coarse = fine;
                if difference < self.tolerance {
                    break;
                }
            }
            Calibration { step, endpoint: coarse, halving_difference: difference }
        })
    }

    /// Step size used after calibration.
    pub fn step(&self) -> f64 {
        self.calibrated().step
    }

    /// Endpoint change observed under the final halving.
    pub fn halving_difference(&self) -> f64 {
        self.calibrated().halving_difference
    }

    /// RK4 from `t0` to `t` with the largest step `<= max_step` dividing the span.
    pub fn integrate(&self, t: f64, max_step: f64) -> Vec<f64> {
        rk4(&self.rhs, self.t0, &self.y0, t, max_step)
    }
}

impl ReferenceSolution for RkReference {
    fn state_at(&self, t: f64) -> Vec<f64> {
        let cal = self.calibrated();
        if (t - self.horizon).abs() <= 1e-14 * self.horizon.abs().max(1.0) {
            return cal.endpoint.clone();
        }
        self.integrate(t, cal.step)
    }

    fn accuracy(&self) -> f64 {
        self.calibrated().halving_difference.max(1e-15)
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Fixed-step classical Runge-Kutta from `(t0, y0)` to `t`.
pub fn rk4(rhs: &Rhs, t0: f64, y0: &[f64], t: f64, max_step: f64) -> Vec<f64> {
    let span = t - t0;
    let mut y = y0.to_vec();
    if span == 0.0 {
        return y;
    }
    let n = (span.abs() / max_step).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let dim = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    for i in 0..n {
        let ti = t0 + i as f64 * h;
        rhs(ti, &y, &mut k1);
        for d in 0..dim {
            tmp[d] = y[d] + 0.5 * h * k1[d];
        }
        rhs(ti + 0.5 * h, &tmp, &mut k2);
        for d in 0..dim {
            tmp[d] = y[d] + 0.5 * h * k2[d];
        }
        rhs(ti + 0.5 * h, &tmp, &mut k3);
        for d in 0..dim {
            tmp[d] = y[d] + h * k3[d];
        }
        rhs(ti + h, &tmp, &mut k4);
        for d in 0..dim {
            y[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
    }
    y
}
