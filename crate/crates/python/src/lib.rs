//! Python bindings for `numbl`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use numbl::boundary_layer::{profile_for, Layer};
use numbl::config::InitialCondition;
use numbl::simulator::{self, Grid, RunOptions, SimulateOptions, StoppingRule};
use numbl::symbol::{self, AnalysisOptions};
use numbl::{check_consistency, flux_coefficients, BuiltinScheme, Error, SchemeSpec};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_)
        | Error::InvalidScheme(_)
        | Error::UnknownScheme { .. }
        | Error::InvalidParameter(_)
        | Error::LengthMismatch { .. }
        | Error::Inconsistent(_)
        | Error::NotApplicable(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn stopping(name: &str) -> PyResult<StoppingRule> {
    numbl::config::parse_stopping(name).map_err(to_py)
}

/// A scheme: space stencil, multistep integrator, velocity and CFL ratio.
#[pyclass(name = "Scheme", frozen)]
struct PyScheme {
    inner: SchemeSpec,
}

#[pymethods]
impl PyScheme {
    /// Explicit scheme from `(l, a_l)` pairs.
    #[new]
    fn new(a: f64, cfl_lambda: f64, space_coeffs: Vec<(i64, f64)>, alpha: Vec<f64>, beta: Vec<f64>) -> PyResult<Self> {
        let inner = SchemeSpec::from_pairs(a, cfl_lambda, &space_coeffs, alpha, beta).map_err(to_py)?;
        Ok(PyScheme { inner })
    }

    /// One of the builtin schemes by name.
    #[staticmethod]
    fn builtin(name: &str, a: f64, cfl_lambda: f64) -> PyResult<Self> {
        let b: BuiltinScheme = name.parse().map_err(to_py)?;
        let inner = numbl::builtin_scheme(b, a, cfl_lambda).map_err(to_py)?;
        Ok(PyScheme { inner })
    }

    #[staticmethod]
    fn builtin_names() -> Vec<&'static str> {
        BuiltinScheme::ALL.iter().map(|b| b.name()).collect()
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a_velocity()
    }

    #[getter]
    fn cfl_lambda(&self) -> f64 {
        self.inner.cfl_lambda()
    }

    #[getter]
    fn r_left(&self) -> usize {
        self.inner.r_left()
    }

    #[getter]
    fn p_right(&self) -> usize {
        self.inner.p_right()
    }

    #[getter]
    fn k_levels(&self) -> usize {
        self.inner.k_levels()
    }

    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.inner.alpha().to_vec()
    }

    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.inner.beta().to_vec()
    }

    #[getter]
    fn stencil(&self) -> Vec<(i64, f64)> {
        self.inner.stencil().collect()
    }

    /// Residual of each consistency sum, keyed by check name.
    #[pyo3(signature = (tol = None))]
    fn consistency(&self, tol: Option<f64>) -> Vec<(String, f64)> {
        let rep = check_consistency(&self.inner, tol.unwrap_or(numbl::scheme::CONSISTENCY_TOL));
        rep.residuals.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Coefficients `f_{-r}..f_{p-1}` of the conservative form.
    fn flux(&self) -> PyResult<Vec<f64>> {
        flux_coefficients(&self.inner).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scheme(a={}, cfl_lambda={}, r={}, p={}, k={})",
            self.inner.a_velocity(),
            self.inner.cfl_lambda(),
            self.inner.r_left(),
            self.inner.p_right(),
            self.inner.k_levels()
        )
    }
}

/// Symbol diagnostics of a scheme.
#[pyclass(name = "Analysis", frozen, get_all)]
struct PyAnalysis {
    space_consistency: bool,
    time_consistency: bool,
    cauchy_stability: String,
    unique_circle_root: bool,
    all_pass: bool,
    circle_roots: Vec<f64>,
    /// `(re, im, multiplicity)`.
    disk_roots: Vec<(f64, f64, usize)>,
    disk_count_poly: Option<usize>,
    disk_count_contour: Option<i64>,
    predicted_count: i64,
}

#[pyfunction]
fn analyze(scheme: &PyScheme) -> PyResult<PyAnalysis> {
    let a = symbol::analyze(&scheme.inner, &AnalysisOptions::default()).map_err(to_py)?;
    let status = a.assumptions();
    Ok(PyAnalysis {
        space_consistency: status.space_consistency,
        time_consistency: status.time_consistency,
        cauchy_stability: status.cauchy_stability.as_str().to_string(),
        unique_circle_root: status.unique_circle_root,
        all_pass: status.all_pass(),
        circle_roots: a.circle.roots.iter().map(|r| r.theta).collect(),
        disk_roots: a.disk_roots.iter().map(|d| (d.z.re, d.z.im, d.multiplicity)).collect(),
        disk_count_poly: a.disk_count_poly,
        disk_count_contour: a.disk_count_contour,
        predicted_count: a.predicted_disk_count,
    })
}

/// `(w_j, w~_j)` for `j <= horizon`.
#[pyfunction]
#[pyo3(signature = (scheme, horizon = 50))]
fn profile(scheme: &PyScheme, horizon: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let p = profile_for(&scheme.inner).map_err(to_py)?;
    let w = (0..=horizon).map(|j| p.evaluate(Layer::Profile, j)).collect();
    let wt = (0..=horizon).map(|j| p.evaluate(Layer::Corrector, j)).collect();
    Ok((w, wt))
}

/// Final state of one run and its errors.
#[pyclass(name = "Simulation", frozen, get_all)]
struct PySimulation {
    x: Vec<f64>,
    u: Vec<f64>,
    u_int: Vec<f64>,
    u_app: Option<Vec<f64>>,
    n: usize,
    t: f64,
    raw_l2: f64,
    corrected_l2: Option<f64>,
    semigroup_sup: f64,
    initial_norm: f64,
}

#[pyfunction]
#[pyo3(signature = (scheme, cells, tfinal, initial = "gaussian_bump", stopping = "floor", force = false))]
fn simulate(
    py: Python<'_>,
    scheme: &PyScheme,
    cells: usize,
    tfinal: f64,
    initial: &str,
    stopping: &str,
    force: bool,
) -> PyResult<PySimulation> {
    let u0 = InitialCondition::resolve(initial).map_err(to_py)?;
    let rule = self::stopping(stopping)?;
    let spec = scheme.inner.clone();
    let sim = py
        .detach(move || {
            let grid = Grid::unit(&spec, cells)?;
            let f = |x: f64| u0.eval(x);
            let opts = SimulateOptions {
                run: RunOptions {
                    stopping: rule,
                    force,
                    ..RunOptions::default()
                },
                weighted_mu: None,
            };
            simulator::simulate(&spec, &grid, &f, tfinal, &opts).map(|s| (grid, s))
        })
        .map_err(to_py)?;
    let (grid, sim) = sim;
    let snap = sim.solution.snapshots.last().expect("final snapshot");
    let errs = sim.report.snapshots.last().expect("final errors");
    let (int, app) = sim.references.last().expect("final references").clone();
    Ok(PySimulation {
        x: (0..grid.n_cells).map(|j| grid.x(j)).collect(),
        u: snap.u.clone(),
        u_int: int,
        u_app: app,
        n: snap.n,
        t: snap.t,
        raw_l2: errs.raw_l2,
        corrected_l2: errs.corrected_l2,
        semigroup_sup: sim.report.semigroup_sup,
        initial_norm: sim.report.initial_norm,
    })
}

/// Errors over a grid ladder with fitted orders.
#[pyclass(name = "Convergence", frozen, get_all)]
struct PyConvergence {
    n_cells: Vec<usize>,
    raw: Vec<f64>,
    corrected: Vec<Option<f64>>,
    raw_slope: Option<f64>,
    corrected_slope: Option<f64>,
}

#[pyfunction]
#[pyo3(signature = (scheme, tfinal, levels, initial = "gaussian_bump"))]
fn converge(
    py: Python<'_>,
    scheme: &PyScheme,
    tfinal: f64,
    levels: Vec<usize>,
    initial: &str,
) -> PyResult<PyConvergence> {
    let u0 = InitialCondition::resolve(initial).map_err(to_py)?;
    let spec = scheme.inner.clone();
    let study = py
        .detach(move || {
            let f = |x: f64| u0.eval(x);
            simulator::convergence_study(&spec, &f, tfinal, &levels, &RunOptions::default())
        })
        .map_err(to_py)?;
    if let Some((n, e)) = study.failure {
        return Err(PyRuntimeError::new_err(format!("level N = {n} failed: {e}")));
    }
    Ok(PyConvergence {
        n_cells: study.rows.iter().map(|r| r.n_cells).collect(),
        raw: study.rows.iter().map(|r| r.raw).collect(),
        corrected: study.rows.iter().map(|r| r.corrected).collect(),
        raw_slope: study.raw_slope,
        corrected_slope: study.corrected_slope,
    })
}

#[pymodule]
fn numbl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScheme>()?;
    m.add_class::<PyAnalysis>()?;
    m.add_class::<PySimulation>()?;
    m.add_class::<PyConvergence>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(profile, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(converge, m)?)?;
    Ok(())
}
