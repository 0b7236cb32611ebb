//! Python bindings. Fields are passed as flat node-major lists of `N·m`
//! floats; curves are lists of such samples on a uniform time grid.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use varcalc_core::calculus::DiffConfig;
use varcalc_core::dubois_reymond;
use varcalc_core::el_solver::{self, BvpOptions, SolveReport};
use varcalc_core::function_space::{DualDensity, GridFunction, GridVector, PeriodicGrid};
use varcalc_core::lagrangian::{self, parse_density as parse, CurveInE, LagrangianSpec};
use varcalc_core::timegrid::{TimeGrid, TimeSeries};
use varcalc_core::weak_integral::{integrate_dual_curve, Quadrature};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn grid(n: usize, m: usize) -> PyResult<PeriodicGrid> {
    if n == 1 { PeriodicGrid::point(m) } else { PeriodicGrid::new(n, m) }.map_err(err)
}

fn field(g: PeriodicGrid, values: Vec<f64>) -> PyResult<GridFunction> {
    GridFunction::from_values(g, values).map_err(err)
}

fn curve(samples: Vec<Vec<f64>>, a: f64, b: f64, g: PeriodicGrid) -> PyResult<CurveInE> {
    let steps = samples.len().saturating_sub(1);
    let time = TimeGrid::new(a, b, steps).map_err(err)?;
    let fields = samples.into_iter().map(|s| field(g, s)).collect::<PyResult<_>>()?;
    CurveInE::from_samples(time, fields).map_err(err)
}

fn dual_curve(samples: Vec<Vec<f64>>, a: f64, b: f64, g: PeriodicGrid) -> PyResult<TimeSeries<DualDensity>> {
    let time = TimeGrid::new(a, b, samples.len().saturating_sub(1)).map_err(err)?;
    let densities = samples
        .into_iter()
        .map(|s| DualDensity::from_density(g, s).map_err(err))
        .collect::<PyResult<_>>()?;
    TimeSeries::new(time, densities).map_err(err)
}

fn quadrature(rule: &str) -> PyResult<Quadrature> {
    match rule {
        "simpson" => Ok(Quadrature::CompositeSimpson),
        "gauss" => Ok(Quadrature::GaussLegendrePerCell { points: 3 }),
        other => Err(PyValueError::new_err(format!("unknown quadrature {other:?}"))),
    }
}

fn samples_of(c: &CurveInE) -> Vec<Vec<f64>> {
    c.samples().iter().map(|s| s.values().to_vec()).collect()
}

fn report<'py>(py: Python<'py>, r: &SolveReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("solution", samples_of(&r.solution))?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("converged", r.converged)?;
    d.set_item("residual_max", r.residual.max_norm())?;
    d.set_item("energy", r.energy.clone())?;
    d.set_item("action", r.action)?;
    d.set_item("gradient_norm", r.gradient_norm)?;
    Ok(d)
}

/// A Lagrangian `L(u, e)` on the periodic grid.
#[pyclass(name = "Lagrangian", frozen)]
struct PyLagrangian {
    inner: LagrangianSpec,
}

#[pymethods]
impl PyLagrangian {
    #[staticmethod]
    fn free_particle() -> Self {
        Self { inner: LagrangianSpec::free_particle() }
    }

    #[staticmethod]
    fn harmonic(omega: f64) -> PyResult<Self> {
        Ok(Self { inner: LagrangianSpec::harmonic(omega).map_err(err)? })
    }

    #[staticmethod]
    fn wave(c: f64) -> PyResult<Self> {
        Ok(Self { inner: LagrangianSpec::wave(c).map_err(err)? })
    }

    #[staticmethod]
    fn sine_gordon(c: f64, beta: f64) -> PyResult<Self> {
        Ok(Self { inner: LagrangianSpec::sine_gordon(c, beta).map_err(err)? })
    }

    /// Density in `x`, `u`, `ux`, `e`, integrated over the circle.
    #[staticmethod]
    fn density(text: &str) -> PyResult<Self> {
        Ok(Self { inner: LagrangianSpec::user_density(text).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[pyo3(signature = (u, e, n, m = 1))]
    fn evaluate(&self, u: Vec<f64>, e: Vec<f64>, n: usize, m: usize) -> PyResult<f64> {
        let g = grid(n, m)?;
        self.inner.evaluate(&field(g, u)?, &field(g, e)?).map_err(err)
    }

    #[pyo3(signature = (u, e, n, m = 1))]
    fn energy(&self, u: Vec<f64>, e: Vec<f64>, n: usize, m: usize) -> PyResult<f64> {
        let g = grid(n, m)?;
        self.inner
            .energy(&field(g, u)?, &field(g, e)?, &DiffConfig::default())
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Lagrangian({})", self.inner.name())
    }
}

/// Canonical form of a density expression; raises on syntax errors.
#[pyfunction]
fn parse_density(text: &str) -> PyResult<String> {
    parse(text).map(|d| d.to_string()).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (l, samples, a, b, n, m = 1, quadrature = "simpson"))]
fn action(
    l: &PyLagrangian,
    samples: Vec<Vec<f64>>,
    a: f64,
    b: f64,
    n: usize,
    m: usize,
    quadrature: &str,
) -> PyResult<f64> {
    let c = curve(samples, a, b, grid(n, m)?)?;
    lagrangian::action(&l.inner, &c, &self::quadrature(quadrature)?).map_err(err)
}

/// Residual densities at the interior nodes, with their max and l2 norms.
#[pyfunction]
#[pyo3(signature = (l, samples, a, b, n, m = 1))]
fn el_residual<'py>(
    py: Python<'py>,
    l: &PyLagrangian,
    samples: Vec<Vec<f64>>,
    a: f64,
    b: f64,
    n: usize,
    m: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let c = curve(samples, a, b, grid(n, m)?)?;
    let r = el_solver::el_residual(&l.inner, &c, &DiffConfig::default()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("nodes", r.nodes().collect::<Vec<_>>())?;
    d.set_item(
        "values",
        r.values().iter().map(|v| v.density().to_vec()).collect::<Vec<_>>(),
    )?;
    d.set_item("max_norm", r.max_norm())?;
    d.set_item("l2_norm", r.l2_norm())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (l, samples, a, b, n, m = 1, k = 50, tol = 1e-6))]
#[allow(clippy::too_many_arguments)]
fn verify_critical<'py>(
    py: Python<'py>,
    l: &PyLagrangian,
    samples: Vec<Vec<f64>>,
    a: f64,
    b: f64,
    n: usize,
    m: usize,
    k: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let c = curve(samples, a, b, grid(n, m)?)?;
    let r = el_solver::verify_critical(&l.inner, &c, k, tol, &DiffConfig::default(), &Quadrature::default())
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("normalized", r.normalized)?;
    d.set_item("max_normalized", r.max_normalized)?;
    d.set_item("passed", r.passed)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (l, u0, v0, a, b, steps, n, m = 1))]
#[allow(clippy::too_many_arguments)]
fn solve_ivp<'py>(
    py: Python<'py>,
    l: &PyLagrangian,
    u0: Vec<f64>,
    v0: Vec<f64>,
    a: f64,
    b: f64,
    steps: usize,
    n: usize,
    m: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let g = grid(n, m)?;
    let time = TimeGrid::new(a, b, steps).map_err(err)?;
    let r = el_solver::solve_ivp(&l.inner, &field(g, u0)?, &field(g, v0)?, &time, &DiffConfig::default())
        .map_err(err)?;
    report(py, &r)
}

#[pyfunction]
#[pyo3(signature = (l, ua, ub, a, b, steps, n, m = 1, max_iterations = 2000))]
#[allow(clippy::too_many_arguments)]
fn solve_bvp<'py>(
    py: Python<'py>,
    l: &PyLagrangian,
    ua: Vec<f64>,
    ub: Vec<f64>,
    a: f64,
    b: f64,
    steps: usize,
    n: usize,
    m: usize,
    max_iterations: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let g = grid(n, m)?;
    let time = TimeGrid::new(a, b, steps).map_err(err)?;
    let opts = BvpOptions { max_iterations, ..BvpOptions::default() };
    let r = el_solver::solve_bvp(&l.inner, &field(g, ua)?, &field(g, ub)?, &time, &DiffConfig::default(), &opts)
        .map_err(err)?;
    report(py, &r)
}

/// Weak integral of a sampled dual curve, as a density list.
#[pyfunction]
#[pyo3(signature = (samples, a, b, n, m = 1, quadrature = "simpson"))]
fn integrate(
    samples: Vec<Vec<f64>>,
    a: f64,
    b: f64,
    n: usize,
    m: usize,
    quadrature: &str,
) -> PyResult<Vec<f64>> {
    let f = dual_curve(samples, a, b, grid(n, m)?)?;
    let v = integrate_dual_curve(&f, &self::quadrature(quadrature)?).map_err(err)?;
    Ok(v.as_slice().to_vec())
}

/// `max_t p₀(h(t) − h̄)` for `h = g − ∫f`.
#[pyfunction]
#[pyo3(signature = (f, g, a, b, n, m = 1))]
fn dbr_defect(f: Vec<Vec<f64>>, g: Vec<Vec<f64>>, a: f64, b: f64, n: usize, m: usize) -> PyResult<f64> {
    let gr = grid(n, m)?;
    dubois_reymond::dbr_defect(&dual_curve(f, a, b, gr)?, &dual_curve(g, a, b, gr)?).map_err(err)
}

#[pymodule]
fn varcalc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLagrangian>()?;
    m.add_function(wrap_pyfunction!(parse_density, m)?)?;
    m.add_function(wrap_pyfunction!(action, m)?)?;
    m.add_function(wrap_pyfunction!(el_residual, m)?)?;
    m.add_function(wrap_pyfunction!(verify_critical, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ivp, m)?)?;
    m.add_function(wrap_pyfunction!(solve_bvp, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(dbr_defect, m)?)?;
    Ok(())
}
