//! Python bindings. Reports come back as plain dicts decoded from the same
//! JSON the CLI writes.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use rbchar_core::detect::{detect_strict_with, SupNorm};
use rbchar_core::dp_independence::{detect_poisson as core_detect_poisson, RowMatching};
use rbchar_core::frequency::{extract_frequencies, run_frequency_recursion, FrequencyConfig};
use rbchar_core::io::ReportDoc;
use rbchar_core::point_process::{detect_csr as core_detect_csr, detect_pp_stationarity_with as core_detect_pp};
use rbchar_core::presets::{self, Dataset, PresetParams};
use rbchar_core::tmcmc::diagnose_convergence;
use rbchar_core::{BoundState, DetectionReport, Error, PointPattern, VerdictRule, Window};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Input(_) | Error::Domain(_) | Error::CategoryRange { .. } | Error::BinRange(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn report_to_py<'py>(py: Python<'py>, r: &DetectionReport, config: serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    let doc = ReportDoc::from_detection(r, config);
    json_to_py(py, &serde_json::to_value(doc).map_err(|e| PyRuntimeError::new_err(e.to_string()))?)
}

fn rule(theta_hi: f64, theta_lo: f64) -> VerdictRule {
    VerdictRule { theta_hi, theta_lo, ..VerdictRule::default() }
}

fn sup_norm(name: &str) -> PyResult<SupNorm> {
    match name {
        "shortcut" => Ok(SupNorm::Shortcut),
        "exact" => Ok(SupNorm::Exact),
        other => Err(PyValueError::new_err(format!("unknown sup norm '{other}'"))),
    }
}

fn pattern(points: Vec<[f64; 2]>, window: Option<[f64; 4]>) -> PyResult<PointPattern> {
    let w = match window {
        Some([x0, x1, y0, y1]) => Window::new(x0, x1, y0, y1),
        None => Window::bounding_box(&points),
    }
    .map_err(py_err)?;
    PointPattern::new(w, points).map_err(py_err)
}

/// Beta recursion over binary indicators.
#[pyclass(name = "BetaRecursion", from_py_object)]
#[derive(Clone)]
struct PyBeta {
    inner: rbchar_core::BetaRecursionState,
}

#[pymethods]
impl PyBeta {
    #[new]
    fn new() -> Self {
        Self { inner: rbchar_core::BetaRecursionState::new() }
    }

    fn update(&mut self, y: bool) {
        self.inner = self.inner.update(y);
    }

    #[getter]
    fn k(&self) -> u64 {
        self.inner.k
    }

    /// (posterior mean, posterior variance).
    fn mean_var(&self) -> PyResult<(f64, f64)> {
        self.inner.mean_var().map_err(py_err)
    }
}

/// Dirichlet recursion over categories 1..=m.
#[pyclass(name = "DirichletRecursion")]
struct PyDirichlet {
    inner: rbchar_core::DirichletRecursionState,
}

#[pymethods]
impl PyDirichlet {
    #[new]
    fn new(m: usize) -> PyResult<Self> {
        Ok(Self { inner: rbchar_core::DirichletRecursionState::new(m).map_err(py_err)? })
    }

    fn update(&mut self, category: usize) -> PyResult<()> {
        self.inner.update(category).map_err(py_err)
    }

    fn mean_var(&self, m: usize) -> PyResult<(f64, f64)> {
        self.inner.mean_var(m).map_err(py_err)
    }
}

/// Dirichlet-process recursion with geometric base measure.
#[pyclass(name = "DpRecursion")]
struct PyDp {
    inner: rbchar_core::DpRecursionState,
}

#[pymethods]
impl PyDp {
    #[new]
    fn new() -> Self {
        Self { inner: rbchar_core::DpRecursionState::new() }
    }

    fn update(&mut self, category: usize) -> PyResult<()> {
        self.inner.update(category).map_err(py_err)
    }

    fn mean_var(&self, m: usize) -> PyResult<(f64, f64)> {
        self.inner.mean_var(m).map_err(py_err)
    }
}

/// Simulate a named preset. Series presets return a list, fields return
/// (locations, values), point patterns return (points, window).
#[pyfunction]
#[pyo3(signature = (name, seed, params=None))]
fn generate<'py>(py: Python<'py>, name: &str, seed: u64, params: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let p: PresetParams = match params {
        Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => PresetParams::default(),
    };
    let v = match presets::generate(name, &p, seed).map_err(py_err)? {
        Dataset::Series(s) => serde_json::json!(s),
        Dataset::Field { locations, values } => serde_json::json!([locations, values]),
        Dataset::Pattern(pp) => {
            let w = pp.window;
            serde_json::json!([pp.points, [w.x0, w.x1, w.y0, w.y1]])
        }
    };
    json_to_py(py, &v)
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    presets::PRESETS.to_vec()
}

/// Strict stationarity of a series cut into consecutive blocks.
#[pyfunction]
#[pyo3(signature = (values, block_size, c1=1.0, sup_norm="shortcut", theta_hi=0.8, theta_lo=0.2))]
fn detect_stationarity<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    block_size: usize,
    c1: f64,
    sup_norm: &str,
    theta_hi: f64,
    theta_lo: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let norm = self::sup_norm(sup_norm)?;
    let part = rbchar_core::sequential_blocks(values.len(), block_size).map_err(py_err)?;
    let r = py
        .detach(|| detect_strict_with(&values, &part, norm, BoundState::nonparametric(c1), &rule(theta_hi, theta_lo)))
        .map_err(py_err)?;
    report_to_py(py, &r, serde_json::json!({"block_size": block_size, "c1": c1, "sup_norm": sup_norm}))
}

/// Strict stationarity of a spatial field over K-means clusters.
#[pyfunction]
#[pyo3(signature = (values, locations, clusters, seed, min_size=10, c1=1.0))]
fn detect_spatial<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    locations: Vec<Vec<f64>>,
    clusters: usize,
    seed: u64,
    min_size: usize,
    c1: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py
        .detach(|| {
            let part = rbchar_core::kmeans_partition(&locations, clusters, min_size, seed)?;
            let mut r = rbchar_core::detect_strict(&values, &part, BoundState::nonparametric(c1), &VerdictRule::default())?;
            r.seed = Some(seed);
            Ok(r)
        })
        .map_err(py_err)?;
    report_to_py(py, &r, serde_json::json!({"clusters": clusters, "min_size": min_size, "c1": c1}))
}

/// Convergence diagnosis of a scalar MCMC trace.
#[pyfunction]
#[pyo3(signature = (chain, block_size, c1=1.0))]
fn mcmc_diagnose<'py>(py: Python<'py>, chain: Vec<f64>, block_size: usize, c1: f64) -> PyResult<Bound<'py, PyAny>> {
    let r = py
        .detach(|| diagnose_convergence(&chain, block_size, BoundState::nonparametric(c1), &VerdictRule::default()))
        .map_err(py_err)?;
    report_to_py(py, &r, serde_json::json!({"block_size": block_size, "c1": c1}))
}

/// Complete spatial randomness of a point pattern.
#[pyfunction]
#[pyo3(signature = (points, clusters, seed, window=None, c1=1.0))]
fn detect_csr<'py>(
    py: Python<'py>,
    points: Vec<[f64; 2]>,
    clusters: usize,
    seed: u64,
    window: Option<[f64; 4]>,
    c1: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let pp = pattern(points, window)?;
    let r = py
        .detach(|| core_detect_csr(&pp, clusters, BoundState::nonparametric(c1), &VerdictRule::default(), seed))
        .map_err(py_err)?;
    report_to_py(py, &r, serde_json::json!({"clusters": clusters, "c1": c1}))
}

/// Stationarity of nearest-neighbour marks of a point pattern.
#[pyfunction]
#[pyo3(signature = (points, clusters, seed, window=None, c1=1.0, sup_norm="shortcut"))]
fn detect_pp_stationarity<'py>(
    py: Python<'py>,
    points: Vec<[f64; 2]>,
    clusters: usize,
    seed: u64,
    window: Option<[f64; 4]>,
    c1: f64,
    sup_norm: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let pp = pattern(points, window)?;
    let norm = self::sup_norm(sup_norm)?;
    let r = py
        .detach(|| core_detect_pp(&pp, clusters, norm, BoundState::nonparametric(c1), &VerdictRule::default(), seed))
        .map_err(py_err)?;
    report_to_py(py, &r, serde_json::json!({"clusters": clusters, "c1": c1, "sup_norm": sup_norm}))
}

/// Poisson check via mutual independence of per-cluster log distances.
#[pyfunction]
#[pyo3(signature = (points, clusters, seed, window=None, alpha=1.0, c1=1.0))]
fn detect_poisson<'py>(
    py: Python<'py>,
    points: Vec<[f64; 2]>,
    clusters: usize,
    seed: u64,
    window: Option<[f64; 4]>,
    alpha: f64,
    c1: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let pp = pattern(points, window)?;
    let r = py
        .detach(|| {
            core_detect_poisson(
                &pp,
                clusters,
                alpha,
                RowMatching::SortedLocation,
                BoundState::nonparametric(c1),
                &VerdictRule::default(),
                seed,
            )
        })
        .map_err(py_err)?;
    report_to_py(py, &r, serde_json::json!({"clusters": clusters, "alpha": alpha, "c1": c1}))
}

/// Bin posterior means and grouped frequencies. `m=None` selects the
/// infinite (Dirichlet-process) model.
#[pyfunction]
#[pyo3(signature = (series, r=1.0, m=None, epsilon=0.005))]
fn detect_frequency<'py>(
    py: Python<'py>,
    series: Vec<f64>,
    r: f64,
    m: Option<usize>,
    epsilon: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = match m {
        Some(m) => FrequencyConfig::finite(r, m),
        None => FrequencyConfig::infinite(r),
    };
    cfg.epsilon_group = epsilon;
    cfg.record_every = series.len().max(1);
    let run = run_frequency_recursion(&series, &cfg).map_err(py_err)?;
    let freqs = extract_frequencies(&run.final_means, epsilon);
    json_to_py(
        py,
        &serde_json::json!({
            "final_means": run.final_means,
            "final_vars": run.final_vars,
            "frequencies": freqs,
        }),
    )
}

#[pymodule]
#[pyo3(name = "rbchar")]
fn rbchar_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", rbchar_core::VERSION)?;
    m.add_class::<PyBeta>()?;
    m.add_class::<PyDirichlet>()?;
    m.add_class::<PyDp>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(detect_stationarity, m)?)?;
    m.add_function(wrap_pyfunction!(detect_spatial, m)?)?;
    m.add_function(wrap_pyfunction!(mcmc_diagnose, m)?)?;
    m.add_function(wrap_pyfunction!(detect_csr, m)?)?;
    m.add_function(wrap_pyfunction!(detect_pp_stationarity, m)?)?;
    m.add_function(wrap_pyfunction!(detect_poisson, m)?)?;
    m.add_function(wrap_pyfunction!(detect_frequency, m)?)?;
    Ok(())
}
