use std::collections::HashMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use q3d::benchmark::{run_benchmark, run_validation, setup, SolverKind};
use q3d::config::BenchmarkConfig;
use q3d::solver::LinearSolver;
use q3d::spectral::{gauss_lobatto_legendre, modified_lobatto, SpectralMesh1D};
use q3d::system::solve_steady;
use q3d::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::ConfigParse { .. } | Error::ConfigValue { .. } | Error::Geometry(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn config(overrides: Option<HashMap<String, String>>) -> PyResult<BenchmarkConfig> {
    let mut cfg = BenchmarkConfig::default();
    let mut pairs: Vec<_> = overrides.unwrap_or_default().into_iter().collect();
    pairs.sort();
    for (k, v) in pairs {
        cfg.set(&k, &v).map_err(to_py)?;
    }
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Hot-spot and neighbour histories of one transient run.
#[pyclass(frozen)]
struct RunResult {
    #[pyo3(get)]
    solver: String,
    #[pyo3(get)]
    times: Vec<f64>,
    #[pyo3(get)]
    hot_spot: Vec<f64>,
    #[pyo3(get)]
    neighbor: Vec<f64>,
    #[pyo3(get)]
    system_dimension: usize,
    #[pyo3(get)]
    config_hash: String,
    /// Run metadata as a JSON string.
    #[pyo3(get)]
    metadata: String,
}

#[pymethods]
impl RunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(solver={:?}, steps={}, final_hot_spot={:?})",
            self.solver,
            self.times.len().saturating_sub(1),
            self.hot_spot.last()
        )
    }
}

/// Resolved config text after applying `overrides`.
#[pyfunction]
#[pyo3(signature = (overrides=None))]
fn config_text(overrides: Option<HashMap<String, String>>) -> PyResult<String> {
    Ok(config(overrides)?.to_text())
}

/// Transient benchmark run with `solver` = "q3d" or "ref3d".
#[pyfunction]
#[pyo3(signature = (overrides=None, solver="q3d"))]
fn run(py: Python<'_>, overrides: Option<HashMap<String, String>>, solver: &str) -> PyResult<RunResult> {
    let cfg = config(overrides)?;
    let kind = match solver {
        "q3d" => SolverKind::Q3d,
        "ref3d" => SolverKind::Ref3d,
        other => return Err(PyValueError::new_err(format!("unknown solver `{other}`, expected q3d or ref3d"))),
    };
    let art = py.detach(|| run_benchmark(&cfg, kind)).map_err(to_py)?;
    let neighbor = art.probes.rows.iter().map(|r| r[2].parse().unwrap_or(f64::NAN)).collect();
    Ok(RunResult {
        solver: kind.name().into(),
        system_dimension: art.metadata["system_dimension"].as_u64().unwrap_or(0) as usize,
        metadata: art.metadata.to_string(),
        config_hash: art.config_hash,
        times: art.times,
        hot_spot: art.hot_spot,
        neighbor,
    })
}

/// Steady Q3D hot-spot temperature on a uniform spectral mesh.
#[pyfunction]
#[pyo3(signature = (overrides=None))]
fn steady_hot_spot(py: Python<'_>, overrides: Option<HashMap<String, String>>) -> PyResult<f64> {
    let cfg = config(overrides)?;
    py.detach(|| {
        let su = setup(&cfg, cfg.refinement_level)?;
        let problem = su.problem(&cfg)?;
        let mesh1d = SpectralMesh1D::new(cfg.initial_interfaces(), cfg.se_degree)?;
        let sol = solve_steady(&problem, &problem.assemble(&mesh1d)?, LinearSolver::Direct)?;
        let [x, y, z] = su.hot_spot;
        sol.evaluate(x, y, z)
    })
    .map_err(to_py)
}

/// Rise-normalized hot-spot differences at `t_end`: `(plain, adapted, passed)`.
#[pyfunction]
#[pyo3(signature = (overrides=None))]
fn validate(py: Python<'_>, overrides: Option<HashMap<String, String>>) -> PyResult<(f64, f64, bool)> {
    let cfg = config(overrides)?;
    let r = py.detach(|| run_validation(&cfg)).map_err(to_py)?;
    Ok((r.final_difference, r.final_difference_adapted, r.passed()))
}

/// `(nodes, triangles)` of the cross-section mesh at `level`.
#[pyfunction]
fn mesh_size(level: u32) -> PyResult<(usize, usize)> {
    let su = setup(&BenchmarkConfig::default(), level).map_err(to_py)?;
    Ok((su.mesh2d.node_count(), su.mesh2d.triangle_count()))
}

/// Mode `mode` of the modified Lobatto basis of `degree` at `xi`.
#[pyfunction]
fn lobatto(mode: usize, xi: f64, degree: usize) -> PyResult<f64> {
    modified_lobatto(mode, xi, degree).map_err(to_py)
}

/// Gauss-Lobatto-Legendre nodes and weights of `degree`.
#[pyfunction]
fn gll(degree: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    if degree == 0 {
        return Err(PyValueError::new_err("degree must be at least 1"));
    }
    Ok(gauss_lobatto_legendre(degree))
}

#[pymodule]
fn pyq3d(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(config_text, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(steady_hot_spot, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(mesh_size, m)?)?;
    m.add_function(wrap_pyfunction!(lobatto, m)?)?;
    m.add_function(wrap_pyfunction!(gll, m)?)?;
    Ok(())
}
