//! Python bindings for `ogr-core`: the test functions, the eigensolver, the
//! OGR and BFGS optimizers, the backtracking line search and the benchmark
//! harness. Vectors cross the boundary as `list[float]`, matrices as lists
//! of rows.

use ogr_core::bfgs::Bfgs;
use ogr_core::harness::{self, ExperimentConfig, OptimizerKind};
use ogr_core::linalg::{sym_eig as core_sym_eig, DenseMatrix, DenseVector};
use ogr_core::linesearch::{self, Acceptance, LineSearchConfig};
use ogr_core::ogr::{estimate, estimate_stationary, Estimator, Ogr, OgrConfig, OgrState};
use ogr_core::testfuns::{self, TestFunction};
use ogr_core::Error;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn lookup(name: &str) -> PyResult<TestFunction> {
    testfuns::lookup(name).map_err(to_py)
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DenseMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("matrix rows must all have the same length"));
    }
    DenseMatrix::new(rows.len(), cols, rows.concat()).map_err(to_py)
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// Names of the nine benchmark functions.
#[pyfunction]
fn function_names() -> Vec<&'static str> {
    testfuns::NAMES.to_vec()
}

#[pyfunction]
fn evaluate(name: &str, x: Vec<f64>) -> PyResult<f64> {
    lookup(name)?.evaluate(&x).map_err(to_py)
}

#[pyfunction]
fn gradient(name: &str, x: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(lookup(name)?.gradient(&x).map_err(to_py)?.into_vec())
}

/// Per-coordinate sampling box `[(low, high), ...]`.
#[pyfunction]
#[pyo3(signature = (name, dim=None))]
fn bounds(name: &str, dim: Option<usize>) -> PyResult<Vec<(f64, f64)>> {
    let f = lookup(name)?;
    let d = dim.unwrap_or_else(|| f.default_dim());
    f.check_dim(d).map_err(to_py)?;
    Ok(f.bounds_for(d))
}

#[pyfunction]
fn known_minimum(name: &str) -> PyResult<f64> {
    Ok(lookup(name)?.known_min_value)
}

/// Largest relative error between the analytic gradient and central
/// differences at `x`.
#[pyfunction]
#[pyo3(signature = (name, x, h=1e-6))]
fn check_gradient(name: &str, x: Vec<f64>, h: f64) -> PyResult<f64> {
    let f = lookup(name)?;
    f.check_dim(x.len()).map_err(to_py)?;
    Ok(testfuns::check_gradient(&f, &x, h))
}

/// `(eigenvalues, eigenvectors)` of a symmetric matrix, eigenvalues in
/// descending order, eigenvectors as the columns of the returned rows.
#[pyfunction]
#[pyo3(signature = (m, tol=1e-14))]
fn sym_eig(m: Vec<Vec<f64>>, tol: f64) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let e = core_sym_eig(&matrix(&m)?, tol).map_err(to_py)?;
    Ok((e.eigenvalues.into_vec(), e.eigenvectors.to_rows()))
}

/// Fits `(H, p)` to `(θ, g)` samples streamed into zero-initialized
/// statistics with decay `beta`.
#[pyfunction]
#[pyo3(signature = (thetas, grads, beta=1.0, estimator="symmetric", eps_eig=1e-12))]
fn estimate_hessian(
    thetas: Vec<Vec<f64>>,
    grads: Vec<Vec<f64>>,
    beta: f64,
    estimator: &str,
    eps_eig: f64,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    if thetas.len() != grads.len() || thetas.is_empty() {
        return Err(PyValueError::new_err("need equally many, and at least one, thetas and grads"));
    }
    let mut st = OgrState::zeroed(thetas[0].len());
    for (t, g) in thetas.iter().zip(&grads) {
        st.update(&DenseVector::from(t.as_slice()), &DenseVector::from(g.as_slice()), beta)
            .map_err(to_py)?;
    }
    let est = estimate(&st, parse(estimator)?, eps_eig).map_err(to_py)?;
    let p = estimate_stationary(&st, &est, eps_eig).map_err(to_py)?;
    Ok((est.h.to_rows(), p.into_vec()))
}

fn acceptance_name(a: Acceptance) -> &'static str {
    match a {
        Acceptance::ZeroDirection => "zero_direction",
        Acceptance::Armijo => "armijo",
        Acceptance::SimpleDecrease => "simple_decrease",
        Acceptance::BestSeen => "best_seen",
        Acceptance::MinimalStep => "minimal_step",
    }
}

/// Backtracking search along `d` from `x` on a Python callable `f`.
/// Without `g` the slope is estimated by a forward difference. Exceptions
/// raised by `f` propagate.
#[pyfunction]
#[pyo3(signature = (f, x, d, g=None, c=1e-4, backtrack_factor=0.5, max_backtracks=50))]
#[allow(clippy::too_many_arguments)]
fn armijo_backtrack<'py>(
    py: Python<'py>,
    f: &Bound<'py, PyAny>,
    x: Vec<f64>,
    d: Vec<f64>,
    g: Option<Vec<f64>>,
    c: f64,
    backtrack_factor: f64,
    max_backtracks: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = LineSearchConfig {
        c,
        backtrack_factor,
        max_backtracks,
        ..LineSearchConfig::default()
    };
    cfg.validate().map_err(to_py)?;
    let mut raised: Option<PyErr> = None;
    let objective = |p: &[f64]| {
        if raised.is_some() {
            return f64::NAN;
        }
        match f.call1((p.to_vec(),)).and_then(|v| v.extract::<f64>()) {
            Ok(v) => v,
            Err(e) => {
                raised = Some(e);
                f64::NAN
            }
        }
    };
    let g = g.map(DenseVector::from);
    let out = linesearch::armijo_backtrack(objective, &x.into(), &d.into(), g.as_ref(), &cfg);
    if let Some(e) = raised {
        return Err(e);
    }
    let out = out.map_err(to_py)?;
    let dict = PyDict::new(py);
    dict.set_item("step", out.step.into_vec())?;
    dict.set_item("scale", out.scale)?;
    dict.set_item("acceptance", acceptance_name(out.acceptance))?;
    dict.set_item("slope", out.slope)?;
    dict.set_item("evaluations", out.evaluations)?;
    dict.set_item("value", out.value)?;
    Ok(dict)
}

/// Online Gradient Regression optimizer.
#[pyclass(name = "Ogr", module = "ogr_py")]
struct PyOgr {
    inner: Ogr,
}

#[pymethods]
impl PyOgr {
    #[new]
    #[pyo3(signature = (dim, alpha=0.5, beta=0.2, eps_eig=1e-12, tau_norm=None, estimator="symmetric"))]
    fn new(dim: usize, alpha: f64, beta: f64, eps_eig: f64, tau_norm: Option<f64>, estimator: &str) -> PyResult<Self> {
        let cfg = OgrConfig {
            beta,
            alpha,
            eps_eig,
            tau_norm: tau_norm.unwrap_or(10.0 * alpha),
            estimator: parse::<Estimator>(estimator)?,
        };
        Ok(Self { inner: Ogr::new(dim, cfg).map_err(to_py)? })
    }

    /// Records `(theta, g)` and returns the step to add to `theta`.
    fn step(&mut self, theta: Vec<f64>, g: Vec<f64>) -> PyResult<Vec<f64>> {
        let s = self.inner.step(&theta.into(), &g.into()).map_err(to_py)?;
        Ok(s.delta.into_vec())
    }

    #[getter]
    fn warmup_steps(&self) -> u64 {
        self.inner.warmup_steps()
    }

    /// Hessian estimate behind the last non-fallback step.
    fn hessian(&self) -> Option<Vec<Vec<f64>>> {
        self.inner.last_estimate().map(|e| e.h.to_rows())
    }

    /// Stationary point of the current quadratic model.
    fn stationary_point(&self) -> PyResult<Option<Vec<f64>>> {
        let cfg = self.inner.config();
        match self.inner.last_estimate() {
            Some(est) => Ok(Some(
                estimate_stationary(self.inner.state(), est, cfg.eps_eig).map_err(to_py)?.into_vec(),
            )),
            None => Ok(None),
        }
    }

    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = self.inner.diagnostics();
        let dict = PyDict::new(py);
        dict.set_item("fallback_steps", d.fallback_steps)?;
        dict.set_item("clipped_steps", d.clipped_steps)?;
        dict.set_item("degraded_estimates", d.degraded_estimates)?;
        Ok(dict)
    }
}

/// BFGS with a fixed step length and no line search of its own.
#[pyclass(name = "Bfgs", module = "ogr_py")]
struct PyBfgs {
    inner: Bfgs,
}

#[pymethods]
impl PyBfgs {
    #[new]
    #[pyo3(signature = (dim, alpha=0.5))]
    fn new(dim: usize, alpha: f64) -> PyResult<Self> {
        Ok(Self { inner: Bfgs::new(dim, alpha).map_err(to_py)? })
    }

    fn step(&mut self, x: Vec<f64>, g: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.step(&x.into(), &g.into()).map_err(to_py)?.into_vec())
    }

    fn inverse_hessian(&self) -> Vec<Vec<f64>> {
        self.inner.state().b_inv.to_rows()
    }

    #[getter]
    fn curvature_skips(&self) -> u64 {
        self.inner.diagnostics().curvature_skips
    }
}

#[allow(clippy::too_many_arguments)]
fn config(
    function: &str,
    optimizer: &str,
    line_search: bool,
    dim: Option<usize>,
    steps: usize,
    seed: u64,
    alpha: Option<f64>,
    early_stop_grad_norm: Option<f64>,
) -> PyResult<ExperimentConfig> {
    let mut c = ExperimentConfig::new(function, parse::<OptimizerKind>(optimizer)?, line_search).map_err(to_py)?;
    if let Some(d) = dim {
        c.dim = d;
    }
    if let Some(a) = alpha {
        c.alpha = a;
    }
    c.max_steps = steps;
    c.seed = seed;
    c.early_stop_grad_norm = early_stop_grad_norm.filter(|&t| t > 0.0);
    Ok(c)
}

/// Start points drawn from the function's sampling box.
#[pyfunction]
#[pyo3(signature = (function, n, seed=42, dim=None))]
fn sample_starts(function: &str, n: usize, seed: u64, dim: Option<usize>) -> PyResult<Vec<Vec<f64>>> {
    let f = lookup(function)?;
    let d = dim.unwrap_or_else(|| f.default_dim());
    f.check_dim(d).map_err(to_py)?;
    Ok(harness::sample_starts(&f.bounds_for(d), n, seed)
        .into_iter()
        .map(DenseVector::into_vec)
        .collect())
}

/// One optimization run from `start`.
#[pyfunction]
#[pyo3(signature = (function, start, optimizer="ogr", line_search=false, steps=2000, alpha=None, early_stop_grad_norm=1e-13, record_trajectory=false))]
#[allow(clippy::too_many_arguments)]
fn run_single<'py>(
    py: Python<'py>,
    function: &str,
    start: Vec<f64>,
    optimizer: &str,
    line_search: bool,
    steps: usize,
    alpha: Option<f64>,
    early_stop_grad_norm: Option<f64>,
    record_trajectory: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let mut c = config(function, optimizer, line_search, Some(start.len()), steps, 0, alpha, early_stop_grad_norm)?;
    c.record_trajectory = record_trajectory;
    let f = lookup(function)?;
    let start = DenseVector::from(start);
    let rec = py
        .detach(|| harness::run_single(&f, &start, &c, 0))
        .map_err(to_py)?;
    let dict = PyDict::new(py);
    dict.set_item("losses", rec.losses)?;
    dict.set_item("final_loss", rec.final_loss)?;
    dict.set_item("iterations_used", rec.iterations_used)?;
    dict.set_item("fallback_count", rec.diagnostics.fallback_count())?;
    dict.set_item("early_stopped", rec.diagnostics.early_stopped)?;
    dict.set_item("non_finite", rec.diagnostics.non_finite)?;
    dict.set_item(
        "trajectory",
        rec.trajectory.map(|t| t.into_iter().map(DenseVector::into_vec).collect::<Vec<_>>()),
    )?;
    Ok(dict)
}

/// Runs `starts` seeded starts and returns the summary plus every final
/// loss in start order.
#[pyfunction]
#[pyo3(signature = (function, optimizer="ogr", line_search=false, dim=None, starts=200, steps=2000, seed=42, alpha=None, early_stop_grad_norm=1e-13, jobs=1))]
#[allow(clippy::too_many_arguments)]
fn run_benchmark<'py>(
    py: Python<'py>,
    function: &str,
    optimizer: &str,
    line_search: bool,
    dim: Option<usize>,
    starts: usize,
    steps: usize,
    seed: u64,
    alpha: Option<f64>,
    early_stop_grad_norm: Option<f64>,
    jobs: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let mut c = config(function, optimizer, line_search, dim, steps, seed, alpha, early_stop_grad_norm)?;
    c.n_starts = starts;
    c.jobs = jobs;
    let b = py.detach(|| harness::run_benchmark(&c)).map_err(to_py)?;
    let s = b.summary;
    let dict = PyDict::new(py);
    dict.set_item("function", s.function)?;
    dict.set_item("optimizer", s.optimizer.as_str())?;
    dict.set_item("line_search", s.line_search)?;
    dict.set_item("dim", s.dim)?;
    dict.set_item("median", s.median)?;
    dict.set_item("best", s.best)?;
    dict.set_item("worst", s.worst)?;
    dict.set_item("success_rate", s.success_rate)?;
    dict.set_item("failed_runs", s.failed_runs)?;
    dict.set_item("final_losses", b.records.iter().map(|r| r.final_loss).collect::<Vec<_>>())?;
    Ok(dict)
}

#[pymodule]
pub fn ogr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(function_names, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(gradient, m)?)?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    m.add_function(wrap_pyfunction!(known_minimum, m)?)?;
    m.add_function(wrap_pyfunction!(check_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(sym_eig, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_hessian, m)?)?;
    m.add_function(wrap_pyfunction!(armijo_backtrack, m)?)?;
    m.add_function(wrap_pyfunction!(sample_starts, m)?)?;
    m.add_function(wrap_pyfunction!(run_single, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    m.add_class::<PyOgr>()?;
    m.add_class::<PyBfgs>()?;
    Ok(())
}
