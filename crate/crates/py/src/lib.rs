//! Python module `nlwe`.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use nlwe_core::audit;
use nlwe_core::ensemble::{
    eta0_to_gamma, gamma_to_eta0, make_example, Ensemble, ExampleKind, ExampleParams, Label,
    ProductState,
};
use nlwe_core::io::{parse_ensemble, EnsembleFile};
use nlwe_core::linalg::{CVec, C64};
use nlwe_core::nlwe::{self as report, GapReport, Interval};
use nlwe_core::{oud, pi};

create_exception!(nlwe, SolverError, PyRuntimeError, "A solver did not reach its tolerance.");

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn solver_error(e: impl ToString) -> PyErr {
    SolverError::new_err(e.to_string())
}

fn params(gamma: Option<f64>, eta0: Option<f64>) -> PyResult<ExampleParams> {
    match (gamma, eta0) {
        (Some(g), None) => ExampleParams::new(g).map_err(value_error),
        (None, Some(e)) => ExampleParams::from_eta0(e).map_err(value_error),
        _ => Err(PyValueError::new_err("give exactly one of gamma, eta0")),
    }
}

fn kind(name: &str) -> PyResult<ExampleKind> {
    name.parse().map_err(PyValueError::new_err)
}

fn label(name: &str) -> PyResult<Label> {
    name.parse().map_err(value_error)
}

/// Four product states `a ⊗ b` labeled 0, 1, +, - with priors.
#[pyclass(name = "Ensemble", module = "nlwe", frozen)]
struct PyEnsemble {
    inner: Ensemble,
}

#[pymethods]
impl PyEnsemble {
    /// `states` lists `(a, b)` pairs of two-component complex vectors in
    /// label order 0, 1, +, -.
    #[new]
    fn new(priors: [f64; 4], states: Vec<(Vec<C64>, Vec<C64>)>) -> PyResult<Self> {
        let states: [(Vec<C64>, Vec<C64>); 4] = states
            .try_into()
            .map_err(|_| PyValueError::new_err("expected four states"))?;
        let states = states.map(|(a, b)| ProductState::new(CVec::new(a), CVec::new(b)));
        let inner = Ensemble::new(priors, states).map_err(value_error)?;
        Ok(PyEnsemble { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (gamma=None, eta0=None))]
    fn lock(gamma: Option<f64>, eta0: Option<f64>) -> PyResult<Self> {
        Ok(PyEnsemble {
            inner: make_example(ExampleKind::Lock, params(gamma, eta0)?),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (gamma=None, eta0=None))]
    fn unlock(gamma: Option<f64>, eta0: Option<f64>) -> PyResult<Self> {
        Ok(PyEnsemble {
            inner: make_example(ExampleKind::Unlock, params(gamma, eta0)?),
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyEnsemble {
            inner: parse_ensemble(text).map_err(value_error)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&EnsembleFile::from_ensemble(&self.inner)).map_err(value_error)
    }

    #[getter]
    fn priors(&self) -> [f64; 4] {
        self.inner.priors()
    }

    /// `(a, b)` factors in label order.
    #[getter]
    fn states(&self) -> Vec<(Vec<C64>, Vec<C64>)> {
        self.inner
            .states()
            .iter()
            .map(|s| (s.a.entries().to_vec(), s.b.entries().to_vec()))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Ensemble(priors={:?})", self.inner.priors())
    }
}

#[pyclass(name = "OudSolution", module = "nlwe", frozen, get_all)]
struct PyOudSolution {
    value: f64,
    /// Weights `s_i` of the effects `s_i |φ̃_i><φ̃_i|`, label order.
    weights: [f64; 4],
    upper_bound: f64,
}

#[pyclass(name = "PiSolution", module = "nlwe", frozen, get_all)]
struct PyPiSolution {
    value: f64,
    upper_bound: f64,
    completeness_residual: f64,
    error_free_residual: f64,
}

#[pyclass(name = "MeSolution", module = "nlwe", frozen, get_all)]
struct PyMeSolution {
    value: f64,
    certificate_residual: f64,
}

fn pair(i: Option<Interval>) -> Option<(f64, f64)> {
    i.map(|i| (i.lower, i.upper))
}

#[pyclass(name = "GapReport", module = "nlwe", frozen)]
struct PyGapReport {
    inner: GapReport,
}

#[pymethods]
impl PyGapReport {
    #[getter(p_G)]
    fn p_g(&self) -> Option<f64> {
        self.inner.p_g
    }

    /// `(lower, upper)`.
    #[getter(p_L)]
    fn p_l(&self) -> Option<(f64, f64)> {
        pair(self.inner.p_l)
    }

    #[getter(p_G_PI)]
    fn p_g_pi(&self) -> Option<f64> {
        self.inner.p_g_pi
    }

    #[getter(p_L_PI)]
    fn p_l_pi(&self) -> Option<(f64, f64)> {
        pair(self.inner.p_l_pi)
    }

    #[getter]
    fn p_guess(&self) -> Option<f64> {
        self.inner.p_guess
    }

    #[getter]
    fn classification(&self) -> &'static str {
        self.inner.classification.as_str()
    }

    #[getter]
    fn nlwe_without_pi(&self) -> PyResult<String> {
        flag(self.inner.nlwe_without_pi)
    }

    #[getter]
    fn nlwe_with_pi(&self) -> PyResult<String> {
        flag(self.inner.nlwe_with_pi)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!(
            "GapReport(p_G={:?}, p_L={:?}, p_G_PI={:?}, p_L_PI={:?}, classification={})",
            self.inner.p_g,
            pair(self.inner.p_l),
            self.inner.p_g_pi,
            pair(self.inner.p_l_pi),
            self.inner.classification.as_str()
        )
    }
}

fn flag(f: report::Flag) -> PyResult<String> {
    serde_json::to_value(f)
        .map_err(value_error)?
        .as_str()
        .map(String::from)
        .ok_or_else(|| PyValueError::new_err("flag"))
}

/// Optimal global unambiguous discrimination.
#[pyfunction]
fn solve_oud(e: &PyEnsemble) -> PyResult<PyOudSolution> {
    let s = oud::solve_oud(&e.inner).map_err(solver_error)?;
    Ok(PyOudSolution {
        value: s.value,
        weights: s.povm.weights(),
        upper_bound: s.value + s.gap,
    })
}

/// Optimal global unambiguous discrimination with post-measurement information.
#[pyfunction]
fn solve_oud_pi(e: &PyEnsemble) -> PyResult<PyPiSolution> {
    let s = pi::solve_oud_pi(&e.inner).map_err(solver_error)?;
    let verdict = pi::verify_pi_unambiguous(&s.povm, &e.inner, pi::PI_ERROR_FREE_TOL);
    Ok(PyPiSolution {
        value: s.value,
        upper_bound: s.upper_bound,
        completeness_residual: s.povm.completeness_residual(),
        error_free_residual: verdict.max_residual,
    })
}

/// Minimum-error discrimination of the four states.
#[pyfunction]
fn solve_me(e: &PyEnsemble) -> PyResult<PyMeSolution> {
    let s = pi::solve_me(&e.inner).map_err(solver_error)?;
    Ok(PyMeSolution {
        value: s.value,
        certificate_residual: s.certificate_residual,
    })
}

/// Whether a product vector has nonzero overlap with the states `w0`, `w1`
/// and zero overlap with the other two.
#[pyfunction]
fn product_vector_exists(e: &PyEnsemble, w0: &str, w1: &str) -> PyResult<bool> {
    let r = pi::product_vector_obstruction(&e.inner, (label(w0)?, label(w1)?)).map_err(value_error)?;
    Ok(!r.is_empty())
}

/// Gap report with the built-in protocols only.
#[pyfunction]
fn analyze(e: &PyEnsemble) -> PyResult<PyGapReport> {
    let inner = report::analyze(&e.inner, &[], &[]).map_err(solver_error)?;
    Ok(PyGapReport { inner })
}

/// Gap report for `"lock"` or `"unlock"`, with the example-specific
/// protocols and certificates.
#[pyfunction]
#[pyo3(signature = (name, gamma=None, eta0=None))]
fn analyze_example(name: &str, gamma: Option<f64>, eta0: Option<f64>) -> PyResult<PyGapReport> {
    let inner = report::analyze_example(kind(name)?, params(gamma, eta0)?).map_err(solver_error)?;
    Ok(PyGapReport { inner })
}

/// Runs the built-in checks; returns `(id, passed, worst, tolerance)` rows.
#[pyfunction]
#[pyo3(signature = (tol=None, seed=0))]
fn verify_all(tol: Option<f64>, seed: u64) -> Vec<(&'static str, bool, f64, f64)> {
    audit::verify_all(tol, seed)
        .into_iter()
        .map(|c| (c.id, c.passed, c.worst, c.tolerance))
        .collect()
}

#[pyfunction(name = "gamma_to_eta0")]
fn py_gamma_to_eta0(gamma: f64) -> f64 {
    gamma_to_eta0(gamma)
}

#[pyfunction(name = "eta0_to_gamma")]
fn py_eta0_to_gamma(eta0: f64) -> PyResult<f64> {
    eta0_to_gamma(eta0).map_err(value_error)
}

#[pymodule]
fn nlwe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEnsemble>()?;
    m.add_class::<PyOudSolution>()?;
    m.add_class::<PyPiSolution>()?;
    m.add_class::<PyMeSolution>()?;
    m.add_class::<PyGapReport>()?;
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add_function(wrap_pyfunction!(solve_oud, m)?)?;
    m.add_function(wrap_pyfunction!(solve_oud_pi, m)?)?;
    m.add_function(wrap_pyfunction!(solve_me, m)?)?;
    m.add_function(wrap_pyfunction!(product_vector_exists, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_example, m)?)?;
    m.add_function(wrap_pyfunction!(verify_all, m)?)?;
    m.add_function(wrap_pyfunction!(py_gamma_to_eta0, m)?)?;
    m.add_function(wrap_pyfunction!(py_eta0_to_gamma, m)?)?;
    Ok(())
}
