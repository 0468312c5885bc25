//! Generating polynomials of Adams-type methods and the maps built on them.
//!
//! For a `k`-step method with weights `beta_0..beta_{k-1}` the generating
//! polynomials are `rho(z) = z^k - z^{k-1}` and `sigma(z) = sum beta_j z^j`.
//! Everything here is a pure function of its inputs.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A point of the complex plane (either the `lambda*tau` plane or the `zeta` plane).
pub type ComplexPoint = Complex64;

/// `sigma(zeta)` counts as zero once it is below this multiple of `sum |beta_j| |zeta|^j`,
/// i.e. when it is indistinguishable from rounding noise.
pub const POLE_THRESHOLD: f64 = 1e-14;

/// Weights of an explicit `k`-step Adams-type method.
///
/// `beta[j]` multiplies `f_{m+j}`; the last entry multiplies the newest value.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamsCoefficients {
    beta: Vec<f64>,
}

impl AdamsCoefficients {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::InvalidInput("a method needs at least one step".into()));
        }
        if let Some(j) = beta.iter().position(|b| !b.is_finite()) {
            return Err(Error::InvalidInput(format!("beta[{j}] is not finite")));
        }
        Ok(Self { beta })
    }

    /// Number of steps.
    pub fn k(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn into_beta(self) -> Vec<f64> {
        self.beta
    }

    /// `beta_j` with zero padding outside `0..k`.
    pub fn padded(&self, j: isize) -> f64 {
        if j < 0 {
            0.0
        } else {
            self.beta.get(j as usize).copied().unwrap_or(0.0)
        }
    }

    /// `sigma(1)`.
    pub fn sum(&self) -> f64 {
        self.beta.iter().sum()
    }

    /// `sum (-1)^j beta_j`, i.e. `sigma(-1)`.
    pub fn alternating_sum(&self) -> f64 {
        self.beta
            .iter()
            .enumerate()
            .map(|(j, b)| if j % 2 == 0 { *b } else { -*b })
            .sum()
    }

    /// Whether `sigma(1) = 1` (first-order consistency) within `tol`.
    pub fn is_consistent(&self, tol: f64) -> bool {
        (self.sum() - 1.0).abs() <= tol
    }

    pub fn sigma(&self, zeta: ComplexPoint) -> ComplexPoint {
        horner(&self.beta, zeta)
    }

    pub fn rho(&self, zeta: ComplexPoint) -> ComplexPoint {
        let k = self.k() as i32;
        zeta.powi(k - 1) * (zeta - 1.0)
    }

    /// Coefficients (ascending powers) of `rho(z) - mu * sigma(z)`, degree `k`.
    pub fn characteristic_polynomial(&self, mu: ComplexPoint) -> Vec<ComplexPoint> {
        let k = self.k();
        let mut coeffs: Vec<ComplexPoint> = self.beta.iter().map(|b| -mu * *b).collect();
        coeffs[k - 1] -= 1.0;
        coeffs.push(Complex64::new(1.0, 0.0));
        coeffs
    }
}

fn horner<T>(coeffs: &[T], z: ComplexPoint) -> ComplexPoint
where
    T: Copy + Into<ComplexPoint>,
{
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + (*c).into())
}

/// Value and derivative of a complex polynomial given by ascending coefficients.
fn horner_with_derivative(coeffs: &[ComplexPoint], z: ComplexPoint) -> (ComplexPoint, ComplexPoint) {
    let mut value = Complex64::new(0.0, 0.0);
    let mut deriv = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        deriv = deriv * z + value;
        value = value * z + c;
    }
    (value, deriv)
}

/// The root-locus map `mu(zeta) = rho(zeta) / sigma(zeta)`.
pub fn eval_mu(coeffs: &AdamsCoefficients, zeta: ComplexPoint) -> Result<ComplexPoint> {
    let sigma = coeffs.sigma(zeta);
    let magnitude = sigma.norm();
    let r = zeta.norm();
    let scale: f64 = coeffs.beta().iter().rev().fold(0.0, |acc, b| acc * r + b.abs());
    if magnitude <= POLE_THRESHOLD * scale || !magnitude.is_finite() {
        return Err(Error::Pole { zeta, magnitude });
    }
    Ok(coeffs.rho(zeta) / sigma)
}

/// All `k` roots (with multiplicity) of `rho(z) - mu * sigma(z)`.
pub fn char_roots(coeffs: &AdamsCoefficients, mu: ComplexPoint) -> Result<Vec<ComplexPoint>> {
    polynomial_roots(&coeffs.characteristic_polynomial(mu))
}

/// Roots of a complex polynomial (ascending coefficients) via the eigenvalues
/// of its companion matrix, each polished by a few Newton steps.
pub fn polynomial_roots(coeffs: &[ComplexPoint]) -> Result<Vec<ComplexPoint>> {
    let lead = *coeffs.last().ok_or(Error::Degenerate)?;
    if lead.norm() == 0.0 || !lead.is_finite() {
        return Err(Error::Degenerate);
    }
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![-coeffs[0] / lead]);
    }

    if coeffs.iter().all(|c| c.im == 0.0) {
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            companion[(i, n - 1)] = -coeffs[i].re / lead.re;
        }
        let eigen = companion.complex_eigenvalues();
        if eigen.iter().all(|z| z.is_finite()) {
            return Ok(eigen.iter().map(|z| polish_root(coeffs, *z)).collect());
        }
    }

    // Frobenius companion matrix: ones on the subdiagonal, -c_j/c_n in the last column.
    let mut companion = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        companion[(i, n - 1)] = -coeffs[i] / lead;
    }
    let eigen = companion
        .schur()
        .eigenvalues()
        .ok_or(Error::Degenerate)?;

    Ok(eigen.iter().map(|z| polish_root(coeffs, *z)).collect())
}

fn polish_root(coeffs: &[ComplexPoint], mut z: ComplexPoint) -> ComplexPoint {
    let (mut value, _) = horner_with_derivative(coeffs, z);
    for _ in 0..3 {
        let (v, d) = horner_with_derivative(coeffs, z);
        if d.norm() == 0.0 || v.norm() == 0.0 {
            break;
        }
        let candidate = z - v / d;
        let (cv, _) = horner_with_derivative(coeffs, candidate);
        if !(cv.norm() < value.norm()) {
            break;
        }
        z = candidate;
        value = cv;
    }
    z
}

/// `Im[rho(e^{i phi}) conj(sigma(e^{i phi}))]` as the sine series
/// `sum_{j=1}^{k} (beta_{k-j} - beta_{k-j-1}) sin(j phi)`.
pub fn eval_nu(coeffs: &AdamsCoefficients, phi: f64) -> f64 {
    let k = coeffs.k() as isize;
    (1..=k)
        .map(|j| {
            let weight = coeffs.padded(k - j) - coeffs.padded(k - j - 1);
            weight * (j as f64 * phi).sin()
        })
        .sum()
}

/// Largest `|p(z)|` over the given points, for ascending coefficients `p`.
pub fn max_residual(coeffs: &[ComplexPoint], points: &[ComplexPoint]) -> f64 {
    points
        .iter()
        .map(|z| horner(coeffs, *z).norm())
        .fold(0.0, f64::max)
}
