//! Construction of method coefficients.
//!
//! Methods are parameterized by a vector `b` through the map [`map_t`], which
//! makes `Im mu(e^{i phi}) >= 0` on `(0, pi)` hold by construction. With that
//! parameterization the interval length is `2 / |b|^2`, so maximizing it under
//! the order conditions is the quadratic program solved in [`optimize`].

pub mod json;
mod optimize;

use crate::error::{Error, Result};
use crate::polycore::AdamsCoefficients;
use crate::stability;

pub use json::MethodJson;
pub use optimize::{optimize, optimize_with, OptimizeOptions, OptimizeOutcome, QuadraticConstraints};

/// Optimization variables `b_0..b_{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BVector(Vec<f64>);

impl BVector {
    pub fn new(b: Vec<f64>) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::InvalidInput("b must have at least one entry".into()));
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("b must be finite".into()));
        }
        Ok(Self(b))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    /// Autocorrelation `r_s = sum_l b_l b_{l+s}`.
    pub fn autocorrelation(&self, lag: usize) -> f64 {
        self.0
            .iter()
            .zip(self.0.iter().skip(lag))
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Cosine-basis coefficients in reversed order, `a_tilde[j] = a_{k-1-j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntermediateA {
    pub a_tilde: Vec<f64>,
}

impl IntermediateA {
    pub fn from_b(b: &BVector) -> Self {
        let k = b.k();
        let a_tilde = (0..k)
            .map(|j| {
                if j + 1 == k {
                    b.autocorrelation(0)
                } else {
                    2.0 * b.autocorrelation(k - 1 - j)
                }
            })
            .collect();
        Self { a_tilde }
    }

    pub fn to_beta(&self) -> Vec<f64> {
        let k = self.a_tilde.len();
        let at = |j: isize| if j < 0 { 0.0 } else { self.a_tilde[j as usize] };
        (0..k as isize)
            .map(|j| {
                if j as usize + 1 == k {
                    at(j) + 0.5 * at(j - 1)
                } else {
                    0.5 * (at(j - 1) + at(j))
                }
            })
            .collect()
    }
}

/// The map `T: b -> beta`.
pub fn map_t(b: &BVector) -> AdamsCoefficients {
    AdamsCoefficients::new(IntermediateA::from_b(b).to_beta())
        .expect("T maps finite b to finite beta")
}

/// Node `1 - k + j` at which order condition `q` weighs `beta_j`.
fn node(k: usize, j: usize) -> f64 {
    j as f64 + 1.0 - k as f64
}

/// `(G_1(beta), ..., G_p(beta))`; all vanish iff the method has order `>= p`.
pub fn order_residuals(coeffs: &AdamsCoefficients, p: usize) -> Vec<f64> {
    let k = coeffs.k();
    (1..=p)
        .map(|q| {
            let weighted: f64 = coeffs
                .beta()
                .iter()
                .enumerate()
                .map(|(j, b)| node(k, j).powi(q as i32 - 1) * b)
                .sum();
            weighted - 1.0 / q as f64
        })
        .collect()
}

/// Magnitude of the terms summed in `G_q`, used to scale residual tolerances.
pub(crate) fn order_condition_scale(coeffs: &AdamsCoefficients, q: usize) -> f64 {
    let k = coeffs.k();
    coeffs
        .beta()
        .iter()
        .enumerate()
        .map(|(j, b)| node(k, j).abs().powi(q as i32 - 1) * b.abs())
        .sum::<f64>()
        .max(1.0)
}

/// Absolute tolerance on `|G_q|`: 1e-10, or the rounding level of the sum when that is larger.
pub fn residual_tolerance(coeffs: &AdamsCoefficients, q: usize) -> f64 {
    RESIDUAL_TOL.max(8.0 * f64::EPSILON * order_condition_scale(coeffs, q))
}

/// Target accuracy of the order conditions.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// A synthesized method with its stability interval length and error constant.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub k: usize,
    pub p: usize,
    pub beta: AdamsCoefficients,
    pub ell: f64,
    pub error_const: f64,
    /// Damping parameter; 0 for undamped methods.
    pub epsilon: f64,
}

impl MethodSpec {
    /// Wraps coefficients of order `p`, measuring `ell` by the closed form
    /// `-mu(-1)` and evaluating the error constant.
    pub fn from_coefficients(beta: AdamsCoefficients, p: usize, epsilon: f64) -> Result<Self> {
        let k = beta.k();
        if p == 0 || p > k {
            return Err(Error::InvalidInput(format!("order {p} outside 1..={k}")));
        }
        let error_const = stability::error_constant(&beta, p)?;
        Ok(Self {
            k,
            p,
            ell: stability::ell_formula(&beta),
            beta,
            error_const,
            epsilon,
        })
    }

    pub fn beta(&self) -> &[f64] {
        self.beta.beta()
    }
}

/// The optimal first-order `k`-step method, `beta_j = (2j+1)/k^2`, with `ell = 2k`.
pub fn first_order(k: usize) -> Result<MethodSpec> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let k2 = (k * k) as f64;
    let beta = (0..k).map(|j| (2 * j + 1) as f64 / k2).collect();
    let kf = k as f64;
    Ok(MethodSpec {
        k,
        p: 1,
        beta: AdamsCoefficients::new(beta)?,
        ell: 2.0 * kf,
        error_const: kf / 3.0 + 1.0 / (6.0 * kf),
        epsilon: 0.0,
    })
}

/// Coefficients of `|sigma(e^{i phi})|^2 = sum_j delta_j cos(j phi)`.
pub fn damping_deltas(coeffs: &AdamsCoefficients) -> Vec<f64> {
    let beta = coeffs.beta();
    let k = beta.len();
    (0..k)
        .map(|j| {
            let lagged: f64 = beta.iter().zip(&beta[j..]).map(|(a, b)| a * b).sum();
            if j == 0 {
                lagged
            } else {
                2.0 * lagged
            }
        })
        .collect()
}

/// Increments `Delta_j` added (times epsilon) to `beta_j` by the damping transform.
pub fn damping_increments(coeffs: &AdamsCoefficients) -> Vec<f64> {
    let delta = damping_deltas(coeffs);
    let k = delta.len();
    let d = |j: usize| delta.get(j).copied().unwrap_or(0.0);
    (0..k)
        .map(|j| {
            if j + 1 == k {
                0.5 * d(1) + d(0)
            } else {
                0.5 * (d(k - j) + d(k - j - 1))
            }
        })
        .collect()
}

/// Damped first-order method `beta_hat = (beta + eps * Delta) / (1 + eps)`.
pub fn apply_damping(coeffs: &AdamsCoefficients, epsilon: f64) -> Result<MethodSpec> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidInput(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    let g1 = coeffs.sum() - 1.0;
    if g1.abs() > RESIDUAL_TOL {
        return Err(Error::OrderViolation { order: 1, residual: g1.abs() });
    }
    let increments = damping_increments(coeffs);
    let beta = coeffs
        .beta()
        .iter()
        .zip(&increments)
        .map(|(b, d)| (b + epsilon * d) / (1.0 + epsilon))
        .collect();
    MethodSpec::from_coefficients(AdamsCoefficients::new(beta)?, 1, epsilon)
}

/// Interval length of the damped optimal first-order `k`-step method.
pub fn damped_interval_length(k: usize, epsilon: f64) -> f64 {
    let k = k as f64;
    6.0 * (1.0 + epsilon) * k.powi(3) / (epsilon * (4.0 * k * k - 1.0) + 3.0 * k * k)
}

/// The `k`-step Adams-Bashforth method (order `k`), from the order conditions.
pub fn classical_adams(k: usize) -> Result<MethodSpec> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let system = nalgebra::DMatrix::from_fn(k, k, |q, j| node(k, j).powi(q as i32));
    let rhs = nalgebra::DVector::from_fn(k, |q, _| 1.0 / (q + 1) as f64);
    let lu = system.clone().lu();
    let mut beta = lu
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidInput(format!("singular order system for k = {k}")))?;
    // One step of iterative refinement; the system is Vandermonde and ill-conditioned for large k.
    let residual = &rhs - &system * &beta;
    if let Some(correction) = lu.solve(&residual) {
        beta += correction;
    }
    MethodSpec::from_coefficients(AdamsCoefficients::new(beta.iter().copied().collect())?, k, 0.0)
}

/// The undamped `(k, p)` method: closed form for `p = 1`, the classical Adams-Bashforth
/// method for `p = k` (the order conditions leave no freedom there, and for `k >= 6` it lies
/// outside the set reachable through [`map_t`]), the optimizer otherwise.
pub fn synthesize(k: usize, p: usize, opts: &OptimizeOptions) -> Result<MethodSpec> {
    if k == 0 || p == 0 || p > k {
        return Err(Error::InvalidInput(format!("need 1 <= p <= k, got k = {k}, p = {p}")));
    }
    if p == 1 {
        first_order(k)
    } else if p == k {
        classical_adams(k)
    } else {
        optimize_with(k, p, opts).map(|o| o.method)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn coeffs(beta: &[f64]) -> AdamsCoefficients {
        AdamsCoefficients::new(beta.to_vec()).unwrap()
    }

    fn assert_slice_eq(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn map_t_examples() {
        let third = 1.0 / 3.0;
        let beta = map_t(&BVector::new(vec![third; 3]).unwrap());
        assert_slice_eq(beta.beta(), &[1.0 / 9.0, 3.0 / 9.0, 5.0 / 9.0], 1e-15);

        assert_eq!(map_t(&BVector::new(vec![1.0]).unwrap()).beta(), &[1.0]);

        let b = BVector::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(IntermediateA::from_b(&b).a_tilde, vec![0.0, 1.0]);
        assert_eq!(map_t(&b).beta(), &[0.0, 1.0]);
    }

    #[test]
    fn residual_examples() {
        assert_slice_eq(&order_residuals(&coeffs(&[-0.5, 1.5]), 2), &[0.0, 0.0], 1e-15);
        assert_slice_eq(&order_residuals(&coeffs(&[1.0 / 9.0, 3.0 / 9.0, 5.0 / 9.0]), 1), &[0.0], 1e-15);
        assert_eq!(order_residuals(&coeffs(&[2.0]), 1), vec![1.0]);
    }

    #[test]
    fn first_order_examples() {
        let euler = first_order(1).unwrap();
        assert_eq!(euler.beta(), &[1.0]);
        assert_eq!(euler.ell, 2.0);
        assert_eq!(euler.error_const, 0.5);

        let m5 = first_order(5).unwrap();
        assert_slice_eq(m5.beta(), &[0.04, 0.12, 0.2, 0.28, 0.36], 1e-16);
        assert_eq!(m5.ell, 10.0);
        assert_abs_diff_eq!(m5.error_const, 1.7, epsilon = 1e-14);

        let m10 = first_order(10).unwrap();
        assert_eq!(m10.ell, 20.0);
        assert_abs_diff_eq!(m10.error_const, 3.35, epsilon = 1e-3);
        assert!(first_order(0).is_err());
    }

    #[test]
    fn delta_examples() {
        assert_slice_eq(&damping_deltas(&coeffs(&[0.25, 0.75])), &[5.0 / 8.0, 3.0 / 8.0], 1e-16);
        assert_eq!(damping_deltas(&coeffs(&[1.0])), vec![1.0]);
        let k3 = coeffs(&[1.0 / 9.0, 3.0 / 9.0, 5.0 / 9.0]);
        assert_slice_eq(&damping_deltas(&k3), &[35.0 / 81.0, 36.0 / 81.0, 10.0 / 81.0], 1e-15);
    }

    #[test]
    fn damping_increment_examples() {
        assert_slice_eq(
            &damping_increments(&coeffs(&[0.25, 0.75])),
            &[3.0 / 16.0, 13.0 / 16.0],
            1e-16,
        );
        let k3 = coeffs(&[1.0 / 9.0, 3.0 / 9.0, 5.0 / 9.0]);
        assert_slice_eq(&damping_increments(&k3), &[5.0 / 81.0, 23.0 / 81.0, 53.0 / 81.0], 1e-15);
    }

    #[test]
    fn zero_damping_is_identity() {
        for k in 1..=8 {
            let m = first_order(k).unwrap();
            let damped = apply_damping(&m.beta, 0.0).unwrap();
            assert_eq!(damped.beta, m.beta);
            assert_abs_diff_eq!(damped.ell, 2.0 * k as f64, epsilon = 1e-12);
            assert_abs_diff_eq!(damped_interval_length(k, 0.0), 2.0 * k as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn damping_rejects_inconsistent_input() {
        assert!(matches!(
            apply_damping(&coeffs(&[0.5, 0.6]), 0.25),
            Err(Error::OrderViolation { order: 1, .. })
        ));
        assert!(apply_damping(&coeffs(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn damped_length_matches_closed_form() {
        for k in 1..=10 {
            for eps in [0.25, 1.0, 10.0] {
                let m = apply_damping(&first_order(k).unwrap().beta, eps).unwrap();
                let expected = damped_interval_length(k, eps);
                assert!((m.ell - expected).abs() <= 1e-12 * expected, "k={k} eps={eps}");
            }
        }
    }

    #[test]
    fn classical_examples() {
        assert_slice_eq(classical_adams(1).unwrap().beta(), &[1.0], 1e-15);
        assert_slice_eq(classical_adams(2).unwrap().beta(), &[-0.5, 1.5], 1e-14);
        let ab4 = classical_adams(4).unwrap();
        assert_slice_eq(ab4.beta(), &[-9.0 / 24.0, 37.0 / 24.0, -59.0 / 24.0, 55.0 / 24.0], 1e-13);
        assert_abs_diff_eq!(ab4.ell, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn classical_adams_has_full_order() {
        for k in 1..=15 {
            let m = classical_adams(k).unwrap();
            for (q, r) in order_residuals(&m.beta, k).iter().enumerate() {
                assert!(r.abs() <= residual_tolerance(&m.beta, q + 1), "k={k} q={} r={r}", q + 1);
            }
        }
    }
}
