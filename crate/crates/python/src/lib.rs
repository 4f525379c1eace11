//! Python bindings for the non-local functional laboratory.

use pyo3::exceptions::{PyKeyError, PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pythonize::pythonize;
use serde::Serialize;

use nonlocal_core::error::LabError;
use nonlocal_core::field::ScalarField;
use nonlocal_core::functional::{Engine, Family, FunctionalSpec, IntegrationPlan};
use nonlocal_core::{constants, corpus, experiments, functional, oracle};

fn to_py(e: LabError) -> PyErr {
    let msg = e.to_string();
    match e {
        LabError::UnknownField(_) => PyKeyError::new_err(msg),
        LabError::BudgetExceeded { .. } => PyMemoryError::new_err(msg),
        LabError::Io(_) | LabError::SweepDiverged { .. } => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn dict<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    pythonize(py, v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// A scalar field from the built-in corpus.
#[pyclass(name = "Field", frozen)]
struct PyField {
    inner: ScalarField,
}

#[pymethods]
impl PyField {
    #[new]
    fn new(id: &str) -> PyResult<Self> {
        corpus::corpus_field(id).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn class_tag(&self) -> &'static str {
        self.inner.class_tag().as_str()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!("expected {} coordinates", self.inner.dim())));
        }
        Ok(self.inner.evaluate(&x))
    }

    /// `Phi(u)` as a dict with `value` (float or "infinite") and `provenance`.
    fn seminorm<'py>(&self, py: Python<'py>, p: f64) -> PyResult<Bound<'py, PyAny>> {
        dict(py, &corpus::seminorm(&self.inner, p).map_err(to_py)?)
    }

    fn scaled(&self, c: f64) -> Self {
        Self { inner: self.inner.scaled(c) }
    }

    fn shifted(&self, shift: Vec<f64>) -> PyResult<Self> {
        if shift.len() != self.inner.dim() {
            return Err(PyValueError::new_err("shift has the wrong dimension"));
        }
        Ok(Self {
            inner: self.inner.shifted(&shift),
        })
    }

    fn __repr__(&self) -> String {
        format!("Field({:?}, dim={})", self.inner.id(), self.inner.dim())
    }
}

fn build_spec(family: &str, p: f64, param: f64, gamma: Option<f64>, r: f64) -> PyResult<FunctionalSpec> {
    let spec = match Family::parse(family).map_err(to_py)? {
        Family::Bbm => FunctionalSpec::bbm(p, param, r),
        Family::Bn => FunctionalSpec::bn(p, param),
        Family::Bsvy => {
            let g = gamma.ok_or_else(|| PyValueError::new_err("family bsvy needs gamma"))?;
            FunctionalSpec::bsvy(p, g, param)
        }
    };
    spec.validate().map_err(to_py)?;
    Ok(spec)
}

fn build_plan(engine: &str, samples: u64, seed: u64) -> PyResult<IntegrationPlan> {
    let engine = Engine::parse(engine).map_err(to_py)?;
    let plan = IntegrationPlan {
        engine,
        samples,
        seed,
        ..IntegrationPlan::default()
    };
    plan.validate().map_err(to_py)?;
    Ok(plan)
}

/// Identifiers of the corpus fields.
#[pyfunction]
fn corpus_ids() -> Vec<&'static str> {
    corpus::CORPUS_IDS.to_vec()
}

/// `K_{N,p}` with the method used.
#[pyfunction]
fn sphere_constant<'py>(py: Python<'py>, n: usize, p: f64) -> PyResult<Bound<'py, PyAny>> {
    dict(py, &constants::sphere_constant(n, p).map_err(to_py)?)
}

#[pyfunction]
#[pyo3(signature = (field, family, p, param, gamma=None, r=1.0, engine="deterministic-1d", samples=200_000, seed=0))]
#[allow(clippy::too_many_arguments)]
fn eval_functional<'py>(
    py: Python<'py>,
    field: &PyField,
    family: &str,
    p: f64,
    param: f64,
    gamma: Option<f64>,
    r: f64,
    engine: &str,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = build_spec(family, p, param, gamma, r)?;
    let plan = build_plan(engine, samples, seed)?;
    let est = py.detach(|| functional::eval_functional(&field.inner, &spec, &plan)).map_err(to_py)?;
    dict(py, &est)
}

/// Closed-form `Phi_lambda` of the unit step `1_(0,1)`.
#[pyfunction]
fn step_oracle<'py>(py: Python<'py>, gamma: f64, p: f64, lam: f64) -> PyResult<Bound<'py, PyAny>> {
    dict(py, &oracle::step_phi_lambda(gamma, p, lam).map_err(to_py)?)
}

#[pyfunction]
#[pyo3(signature = (field, family, p, ladder, gamma=None, r=1.0, engine="deterministic-1d", samples=200_000, seed=0))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    field: &PyField,
    family: &str,
    p: f64,
    ladder: Vec<f64>,
    gamma: Option<f64>,
    r: f64,
    engine: &str,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let first = *ladder.first().ok_or_else(|| PyValueError::new_err("empty ladder"))?;
    let spec = build_spec(family, p, first, gamma, r)?;
    let plan = build_plan(engine, samples, seed)?;
    let u = &field.inner;
    let result = py
        .detach(|| {
            let target = experiments::reference_target(u, &spec)?;
            experiments::run_sweep(u, &spec, &ladder, &plan, target)
        })
        .map_err(to_py)?;
    dict(py, &result)
}

#[pymodule]
fn nonlocal_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(corpus_ids, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_constant, m)?)?;
    m.add_function(wrap_pyfunction!(eval_functional, m)?)?;
    m.add_function(wrap_pyfunction!(step_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
