//! Stability analysis of Adams-type methods: root-locus tracing, the
//! root-condition test, stability-interval measurement and error constants.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::plot::{Plot, Series};
use crate::polycore::{char_roots, eval_mu, AdamsCoefficients, ComplexPoint};
use crate::synth::json::sig17;
use crate::synth::order_condition_scale;

/// Roots up to this far outside the unit circle still count as inside.
pub const ROOT_MODULUS_TOL: f64 = 1e-9;
/// Roots at least this close to the unit circle must be simple.
pub const UNIT_CIRCLE_BAND: f64 = 1e-7;
/// Minimum separation of near-unit-modulus roots to count as distinct.
pub const ROOT_SEPARATION: f64 = 1e-7;
/// Absolute bracket width of the stability-interval bisection.
pub const BISECTION_TOL: f64 = 1e-10;
/// Relative agreement required between the closed form and the oracle.
pub const INTERVAL_AGREEMENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocusPoint {
    pub phi: f64,
    pub mu: ComplexPoint,
}

/// Image of the unit circle under `mu(zeta) = rho(zeta)/sigma(zeta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocusCurve {
    pub k: usize,
    pub points: Vec<LocusPoint>,
}

impl LocusCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phi,re,im\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", sig17(p.phi), sig17(p.mu.re), sig17(p.mu.im));
        }
        out
    }

    /// Closed polyline of the curve in the `lambda*tau` plane.
    pub fn to_svg(&self, title: &str) -> String {
        let mut pts: Vec<(f64, f64)> = self.points.iter().map(|p| (p.mu.re, p.mu.im)).collect();
        if let Some(first) = pts.first().copied() {
            pts.push(first);
        }
        Plot::new(title, "Re(lambda tau)", "Im(lambda tau)")
            .with_axes_through_origin()
            .with_equal_aspect()
            .series(Series::line(format!("k = {}", self.k), pts))
            .to_svg()
    }
}

/// Samples `mu(e^{i phi_i})` at `phi_i = 2 pi i / n_points`.
pub fn trace_locus(coeffs: &AdamsCoefficients, n_points: usize) -> Result<LocusCurve> {
    if n_points < 8 {
        return Err(Error::InvalidInput(format!("need at least 8 locus points, got {n_points}")));
    }
    let points = (0..n_points)
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / n_points as f64;
            let zeta = if i == 0 { Complex64::new(1.0, 0.0) } else { Complex64::from_polar(1.0, phi) };
            eval_mu(coeffs, zeta).map(|mu| LocusPoint { phi, mu })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocusCurve { k: coeffs.k(), points })
}

/// Root condition for `lambda*tau = mu`: all roots in the closed unit disc,
/// those on (or numerically near) the circle simple.
pub fn stable_at(coeffs: &AdamsCoefficients, mu: ComplexPoint) -> bool {
    let Ok(roots) = char_roots(coeffs, mu) else {
        return false;
    };
    if roots.iter().any(|z| !z.is_finite() || z.norm() > 1.0 + ROOT_MODULUS_TOL) {
        return false;
    }
    let boundary: Vec<&ComplexPoint> = roots.iter().filter(|z| z.norm() >= 1.0 - UNIT_CIRCLE_BAND).collect();
    boundary
        .iter()
        .enumerate()
        .all(|(i, a)| boundary[i + 1..].iter().all(|b| (*a - *b).norm() >= ROOT_SEPARATION))
}

/// `-mu(-1) = -2 (-1)^k / sum (-1)^j beta_j`, clamped at 0.
pub fn ell_formula(coeffs: &AdamsCoefficients) -> f64 {
    let sign = if coeffs.k() % 2 == 0 { 1.0 } else { -1.0 };
    let ell = -2.0 * sign / coeffs.alternating_sum();
    if ell.is_nan() || ell < 0.0 {
        0.0
    } else {
        ell
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalResult {
    pub ell_formula: f64,
    pub ell_oracle: f64,
    pub agree: bool,
}

/// Scan steps per closed-form interval length before giving up on finding instability.
const SCAN_STEPS: usize = 1000;
const SCAN_LIMIT: usize = 4 * SCAN_STEPS;

/// Measures the stability interval by the closed form and, independently, by
/// scanning the negative real axis with [`stable_at`] and bisecting the first
/// stable/unstable bracket.
pub fn measure_interval(coeffs: &AdamsCoefficients) -> IntervalResult {
    let ell_formula = ell_formula(coeffs);
    let step = if ell_formula > 0.0 && ell_formula.is_finite() {
        ell_formula / SCAN_STEPS as f64
    } else {
        1e-3
    };
    let real = |x: f64| Complex64::new(-x, 0.0);

    let mut ell_oracle = SCAN_LIMIT as f64 * step;
    for i in 1..=SCAN_LIMIT {
        let x = i as f64 * step;
        if !stable_at(coeffs, real(x)) {
            let (mut lo, mut hi) = ((i - 1) as f64 * step, x);
            while hi - lo > BISECTION_TOL {
                let mid = 0.5 * (lo + hi);
                if stable_at(coeffs, real(mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            ell_oracle = 0.5 * (lo + hi);
            break;
        }
    }
    let agree = (ell_formula - ell_oracle).abs() <= INTERVAL_AGREEMENT * (1.0 + ell_formula);
    IntervalResult { ell_formula, ell_oracle, agree }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Error constant `C = C_{p+1} / sigma(1)` with `alpha_k = 1`, `alpha_{k-1} = -1`.
pub fn error_constant(coeffs: &AdamsCoefficients, p: usize) -> Result<f64> {
    let k = coeffs.k();
    if p == 0 || p > k {
        return Err(Error::InvalidInput(format!("order {p} outside 1..={k}")));
    }
    for (i, r) in crate::synth::order_residuals(coeffs, p).iter().enumerate() {
        let q = i + 1;
        let tol = 1e-8_f64.max(8.0 * f64::EPSILON * order_condition_scale(coeffs, q));
        if r.abs() > tol {
            return Err(Error::OrderViolation { order: q, residual: r.abs() });
        }
    }
    let power = p as i32;
    let alpha_part = (k as f64).powi(power + 1) - ((k - 1) as f64).powi(power + 1);
    let beta_part: f64 = coeffs
        .beta()
        .iter()
        .enumerate()
        .map(|(j, b)| b * (j as f64).powi(power))
        .sum();
    let c = (alpha_part - (p + 1) as f64 * beta_part) / factorial(p + 1);
    Ok(c / coeffs.sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{classical_adams, first_order};
    use approx::assert_abs_diff_eq;

    fn coeffs(beta: &[f64]) -> AdamsCoefficients {
        AdamsCoefficients::new(beta.to_vec()).unwrap()
    }

    #[test]
    fn euler_locus_is_shifted_unit_circle() {
        let curve = trace_locus(&coeffs(&[1.0]), 16).unwrap();
        for p in &curve.points {
            assert_abs_diff_eq!((p.mu + 1.0).norm(), 1.0, epsilon = 1e-15);
        }
        assert_eq!(curve.points[0].mu, Complex64::new(0.0, 0.0));
        assert!(trace_locus(&coeffs(&[1.0]), 4).is_err());
    }

    #[test]
    fn locus_hits_minus_two_k_at_pi() {
        let curve = trace_locus(&coeffs(&[0.25, 0.75]), 8).unwrap();
        let at_pi = curve.points[4];
        assert_abs_diff_eq!(at_pi.phi, PI, epsilon = 1e-15);
        assert_abs_diff_eq!(at_pi.mu.re, -4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at_pi.mu.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn locus_is_conjugate_symmetric() {
        let m = first_order(6).unwrap();
        let n = 64;
        let curve = trace_locus(&m.beta, n).unwrap();
        for i in 1..n {
            let a = curve.points[i].mu;
            let b = curve.points[n - i].mu;
            assert!((a - b.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn locus_pole_propagates() {
        // sigma(z) = (1 + z^2)/2 vanishes at z = i, which is sample 2 of 8
        assert!(matches!(trace_locus(&coeffs(&[0.5, 0.0, 0.5]), 8), Err(Error::Pole { .. })));
    }

    #[test]
    fn stable_at_examples() {
        for beta in [vec![1.0], vec![-0.5, 1.5], vec![0.04, 0.12, 0.2, 0.28, 0.36]] {
            assert!(stable_at(&coeffs(&beta), Complex64::new(0.0, 0.0)));
        }
        let k2 = coeffs(&[0.25, 0.75]);
        assert!(stable_at(&k2, Complex64::new(-3.9, 0.0)));
        assert!(!stable_at(&k2, Complex64::new(-4.2, 0.0)));
        assert!(!stable_at(&coeffs(&[-0.5, 1.5]), Complex64::new(-1.1, 0.0)));
    }

    #[test]
    fn double_unit_root_is_unstable() {
        // at mu = -4 the characteristic polynomial is (z + 1)^2
        assert!(!stable_at(&coeffs(&[0.25, 0.75]), Complex64::new(-4.0, 0.0)));
    }

    #[test]
    fn interval_examples() {
        let r = measure_interval(&first_order(7).unwrap().beta);
        assert_abs_diff_eq!(r.ell_formula, 14.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.ell_oracle, 14.0, epsilon = 1e-8);
        assert!(r.agree);

        let ab4 = measure_interval(&classical_adams(4).unwrap().beta);
        assert_abs_diff_eq!(ab4.ell_formula, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(ab4.ell_oracle, 0.3, epsilon = 1e-8);

        let ab2 = measure_interval(&coeffs(&[-0.5, 1.5]));
        assert_abs_diff_eq!(ab2.ell_oracle, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn error_constant_examples() {
        assert_abs_diff_eq!(error_constant(&first_order(2).unwrap().beta, 1).unwrap(), 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(error_constant(&coeffs(&[1.0]), 1).unwrap(), 0.5, epsilon = 1e-15);
        // AB2: 5/12
        assert_abs_diff_eq!(error_constant(&coeffs(&[-0.5, 1.5]), 2).unwrap(), 5.0 / 12.0, epsilon = 1e-14);
        assert!(matches!(
            error_constant(&coeffs(&[0.25, 0.75]), 2),
            Err(Error::OrderViolation { order: 2, .. })
        ));
    }

    #[test]
    fn first_order_error_constant_closed_form() {
        for k in 1..=15 {
            let kf = k as f64;
            let c = error_constant(&first_order(k).unwrap().beta, 1).unwrap();
            assert!((c - (kf / 3.0 + 1.0 / (6.0 * kf))).abs() <= 1e-13, "k={k}");
        }
    }

    #[test]
    fn locus_csv_header_and_rows() {
        let csv = trace_locus(&coeffs(&[1.0]), 8).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("phi,re,im"));
        assert_eq!(lines.count(), 8);
    }
}
