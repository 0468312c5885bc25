//! Python bindings for `stab-adams`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::stab_adams as core;
use core::integrate::{self as integration, RunStatus};
use core::polycore::{self, AdamsCoefficients};
use core::problems::{self, ProblemOptions};
use core::synth::{self, OptimizeOptions};
use core::{stability, tables, Error, MethodSpec};

create_exception!(stab_adams, NotConvergedError, PyException, "The optimizer found no feasible method.");
create_exception!(stab_adams, PoleError, PyException, "sigma vanishes at the evaluation point.");
create_exception!(stab_adams, OrderViolationError, PyException, "An order condition is not satisfied.");
create_exception!(stab_adams, ReferenceUnavailableError, PyException, "The problem has no reference solution.");

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::NotConverged { .. } => NotConvergedError::new_err(msg),
        Error::Pole { .. } => PoleError::new_err(msg),
        Error::OrderViolation { .. } => OrderViolationError::new_err(msg),
        Error::ReferenceUnavailable(_) => ReferenceUnavailableError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn coefficients(beta: Vec<f64>) -> PyResult<AdamsCoefficients> {
    AdamsCoefficients::new(beta).map_err(to_py)
}

/// An explicit Adams-type method `y_{m+k} = y_{m+k-1} + tau * sum_j beta_j f_{m+j}`.
#[pyclass(name = "Method", module = "stab_adams", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyMethod {
    inner: MethodSpec,
}

#[pymethods]
impl PyMethod {
    /// Builds a method from coefficients; `ell` and the error constant are computed.
    #[new]
    #[pyo3(signature = (beta, p, epsilon = 0.0))]
    fn new(beta: Vec<f64>, p: usize, epsilon: f64) -> PyResult<Self> {
        let inner = MethodSpec::from_coefficients(coefficients(beta)?, p, epsilon).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p
    }

    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.inner.beta().to_vec()
    }

    #[getter]
    fn ell(&self) -> f64 {
        self.inner.ell
    }

    #[getter]
    fn error_const(&self) -> f64 {
        self.inner.error_const
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        MethodSpec::from_json(text).map(|inner| Self { inner }).map_err(to_py)
    }

    fn sigma(&self, z: Complex64) -> Complex64 {
        self.inner.beta.sigma(z)
    }

    fn rho(&self, z: Complex64) -> Complex64 {
        self.inner.beta.rho(z)
    }

    /// The root-locus map `rho(z) / sigma(z)`.
    fn mu(&self, z: Complex64) -> PyResult<Complex64> {
        polycore::eval_mu(&self.inner.beta, z).map_err(to_py)
    }

    fn nu(&self, phi: f64) -> f64 {
        polycore::eval_nu(&self.inner.beta, phi)
    }

    /// Roots of the characteristic polynomial at `lambda * tau = mu`.
    fn roots(&self, mu: Complex64) -> PyResult<Vec<Complex64>> {
        polycore::char_roots(&self.inner.beta, mu).map_err(to_py)
    }

    fn stable_at(&self, mu: Complex64) -> bool {
        stability::stable_at(&self.inner.beta, mu)
    }

    /// `(phi, mu)` samples of the locus curve.
    #[pyo3(signature = (n_points = 1000))]
    fn locus(&self, n_points: usize) -> PyResult<Vec<(f64, Complex64)>> {
        let curve = stability::trace_locus(&self.inner.beta, n_points).map_err(to_py)?;
        Ok(curve.points.iter().map(|p| (p.phi, p.mu)).collect())
    }

    /// `(ell_formula, ell_oracle, agree)`.
    fn measure_interval(&self) -> (f64, f64, bool) {
        let r = stability::measure_interval(&self.inner.beta);
        (r.ell_formula, r.ell_oracle, r.agree)
    }

    #[pyo3(signature = (p = None))]
    fn order_residuals(&self, p: Option<usize>) -> Vec<f64> {
        synth::order_residuals(&self.inner.beta, p.unwrap_or(self.inner.p))
    }

    fn damped(&self, epsilon: f64) -> PyResult<Self> {
        synth::apply_damping(&self.inner.beta, epsilon).map(|inner| Self { inner }).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Method(k={}, p={}, epsilon={}, ell={}, error_const={})",
            self.inner.k, self.inner.p, self.inner.epsilon, self.inner.ell, self.inner.error_const
        )
    }
}

fn wrap(r: core::Result<MethodSpec>) -> PyResult<PyMethod> {
    r.map(|inner| PyMethod { inner }).map_err(to_py)
}

/// The first-order k-step method with `ell = 2k`.
#[pyfunction]
fn first_order(k: usize) -> PyResult<PyMethod> {
    wrap(synth::first_order(k))
}

/// The first-order k-step method damped by `epsilon`.
#[pyfunction]
fn damp(k: usize, epsilon: f64) -> PyResult<PyMethod> {
    wrap(synth::first_order(k).and_then(|m| synth::apply_damping(&m.beta, epsilon)))
}

#[pyfunction]
fn classical_adams(k: usize) -> PyResult<PyMethod> {
    wrap(synth::classical_adams(k))
}

/// Runs the multi-start optimizer for the `(k, p)` method.
#[pyfunction]
#[pyo3(signature = (k, p, attempts = 64, seed = 0))]
fn optimize(py: Python<'_>, k: usize, p: usize, attempts: usize, seed: u64) -> PyResult<PyMethod> {
    let opts = OptimizeOptions { attempts, seed, ..OptimizeOptions::default() };
    wrap(py.detach(|| synth::optimize_with(k, p, &opts).map(|o| o.method)))
}

/// The `(k, p)` method as the command line's `synth` builds it.
#[pyfunction]
#[pyo3(signature = (k, p, attempts = 64, seed = 0))]
fn synthesize(py: Python<'_>, k: usize, p: usize, attempts: usize, seed: u64) -> PyResult<PyMethod> {
    let opts = OptimizeOptions { attempts, seed, ..OptimizeOptions::default() };
    wrap(py.detach(|| synth::synthesize(k, p, &opts)))
}

/// The coefficients `beta = T(b)`.
#[pyfunction]
fn map_t(b: Vec<f64>) -> PyResult<Vec<f64>> {
    let b = synth::BVector::new(b).map_err(to_py)?;
    Ok(synth::map_t(&b).into_beta())
}

#[pyfunction]
fn damped_interval_length(k: usize, epsilon: f64) -> f64 {
    synth::damped_interval_length(k, epsilon)
}

fn problem(name: &str, lambda: f64, mu: f64, n: usize) -> PyResult<problems::OdeProblem> {
    problems::by_name(name, &ProblemOptions { lambda, mu, n }).map_err(to_py)
}

/// Fixed-step integration of a named test problem; returns a dict describing the run.
#[pyfunction]
#[pyo3(signature = (method, problem_name, tau, lambda_ = -1.0, mu = problems::BURGERS_MU, n = problems::BURGERS_N))]
fn integrate<'py>(
    py: Python<'py>,
    method: &PyMethod,
    problem_name: &str,
    tau: f64,
    lambda_: f64,
    mu: f64,
    n: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let pr = problem(problem_name, lambda_, mu, n)?;
    let run = py.detach(|| integration::run_fixed(&pr, &method.inner, tau)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("status", run.status.label())?;
    if let RunStatus::Diverged { step } = run.status {
        out.set_item("diverged_at_step", step)?;
    }
    out.set_item("steps", run.steps)?;
    out.set_item("f_evals", run.f_evals)?;
    out.set_item("starter_f_evals", run.starter_f_evals)?;
    out.set_item("bounded", run.is_bounded())?;
    out.set_item("endpoint", run.endpoint)?;
    Ok(out)
}

/// Convergence study; returns `(points, observed_order)` with points `(tau, error, status)`.
#[pyfunction]
#[pyo3(signature = (method, problem_name, taus, lambda_ = -1.0, mu = problems::BURGERS_MU, n = problems::BURGERS_N))]
#[allow(clippy::type_complexity)]
fn converge(
    py: Python<'_>,
    method: &PyMethod,
    problem_name: &str,
    taus: Vec<f64>,
    lambda_: f64,
    mu: f64,
    n: usize,
) -> PyResult<(Vec<(f64, f64, &'static str)>, Option<f64>)> {
    let pr = problem(problem_name, lambda_, mu, n)?;
    let report = py.detach(|| integration::converge_study(&pr, &method.inner, &taus)).map_err(to_py)?;
    let points = report.points.iter().map(|p| (p.tau, p.error, p.status.label())).collect();
    Ok((points, report.observed_order))
}

/// One of the `delta`, `errconst`, `coeffs` tables as CSV text.
#[pyfunction]
fn table_csv(py: Python<'_>, which: &str) -> PyResult<String> {
    let kind: tables::TableKind = which.parse().map_err(to_py)?;
    let table = py.detach(|| tables::build_table(kind, &OptimizeOptions::default())).map_err(to_py)?;
    Ok(table.to_csv())
}

#[pymodule]
fn stab_adams(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMethod>()?;
    m.add_function(wrap_pyfunction!(first_order, m)?)?;
    m.add_function(wrap_pyfunction!(damp, m)?)?;
    m.add_function(wrap_pyfunction!(classical_adams, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(map_t, m)?)?;
    m.add_function(wrap_pyfunction!(damped_interval_length, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(converge, m)?)?;
    m.add_function(wrap_pyfunction!(table_csv, m)?)?;
    m.add("NotConvergedError", m.py().get_type::<NotConvergedError>())?;
    m.add("PoleError", m.py().get_type::<PoleError>())?;
    m.add("OrderViolationError", m.py().get_type::<OrderViolationError>())?;
    m.add("ReferenceUnavailableError", m.py().get_type::<ReferenceUnavailableError>())?;
    Ok(())
}
