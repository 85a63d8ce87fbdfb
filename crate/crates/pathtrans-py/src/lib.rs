//! Python bindings: group maps, crossed-module residuals, horizontal lifts,
//! loop holonomy, and the scenario commands returning JSON reports.

use std::path::Path;

use pathtrans::geometry::{parse_one_form, BundlePoint, ChartDomain};
use pathtrans::integrate::Integrator;
use pathtrans::path::{parse_path, TimeGrid, DEFAULT_MARGIN};
use pathtrans::pathspace;
use pathtrans::{CrossedModule, GroupElement, LieGroup};
use pathtrans_cli::{execute, Action, Scenario};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Matrix = Vec<Vec<f64>>;

/// Time nodes, base points and fiber matrices of a lifted path.
type Lift = (Vec<f64>, Vec<Vec<f64>>, Vec<Matrix>);

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(g: &GroupElement) -> Matrix {
    let (r, c) = g.data.shape();
    (0..r).map(|i| (0..c).map(|j| g.data[(i, j)]).collect()).collect()
}

fn from_matrix(group: LieGroup, m: &Matrix) -> pathtrans::Result<GroupElement> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    if flat.len() != rows * cols {
        return Err(pathtrans::Error::DimensionMismatch("ragged matrix".into()));
    }
    group.element_from_matrix(nalgebra::DMatrix::from_row_slice(rows, cols, &flat))
}

fn chart_for(dim: usize) -> ChartDomain {
    ChartDomain::cube(dim, -2.0, 2.0)
}

/// exp of the algebra element with the given coordinates.
pub fn exp_coords(group: &str, coords: &[f64]) -> pathtrans::Result<Matrix> {
    let g = LieGroup::parse(group)?;
    if coords.len() != g.dim() {
        return Err(pathtrans::Error::DimensionMismatch(format!("{g} has {} coordinates, got {}", g.dim(), coords.len())));
    }
    Ok(to_matrix(&g.algebra_from_coords(coords).exp()))
}

/// Coordinates of log(g).
pub fn log_coords(group: &str, m: &Matrix) -> pathtrans::Result<Vec<f64>> {
    let g = LieGroup::parse(group)?;
    let x = from_matrix(g, m)?.log()?;
    Ok(g.coords(&x))
}

/// Largest Peiffer residual over random (g, h, h′) drawn from `seed`.
pub fn module_residual(module: &str, samples: usize, seed: u64) -> pathtrans::Result<f64> {
    let m = CrossedModule::parse(module)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut elem = |g: LieGroup| {
        let c: Vec<f64> = (0..g.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        g.algebra_from_coords(&c).exp()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (g, h, h2) = (elem(m.g), elem(m.h), elem(m.h));
        let (r1, r2) = m.residual(&g, &h, &h2);
        worst = worst.max(r1).max(r2);
    }
    Ok(worst)
}

/// Horizontal lift of a path preset: (t nodes, base points, fiber matrices).
pub fn lift(
    group: &str,
    connection: &str,
    path: &str,
    intervals: usize,
    g0: &[f64],
    integrator: &str,
) -> pathtrans::Result<Lift> {
    let g = LieGroup::parse(group)?;
    let integ: Integrator = integrator.parse()?;
    let gamma = parse_path(path, TimeGrid::unit(intervals), DEFAULT_MARGIN)?;
    let chart = chart_for(gamma.dim());
    gamma.check_in_chart(&chart)?;
    let abar = parse_one_form(connection, &chart, g)?;
    let start = g.algebra_from_coords(&pad(g0, g.dim())?).exp();
    let ovg = pathspace::horizontal_lift(&abar, &gamma, &BundlePoint::new(gamma.initial().to_vec(), start), integ)?;
    let xs = ovg.points.iter().map(|p| p.x.clone()).collect();
    let gs = ovg.points.iter().map(|p| to_matrix(&p.g)).collect();
    Ok((ovg.grid.nodes(), xs, gs))
}

fn pad(c: &[f64], dim: usize) -> pathtrans::Result<Vec<f64>> {
    match c.len() {
        0 => Ok(vec![0.0; dim]),
        n if n == dim => Ok(c.to_vec()),
        n => Err(pathtrans::Error::DimensionMismatch(format!("expected {dim} coordinates, got {n}"))),
    }
}

/// Holonomy of a loop preset starting at the identity.
pub fn holonomy(group: &str, connection: &str, path: &str, intervals: usize, integrator: &str) -> pathtrans::Result<Matrix> {
    let g = LieGroup::parse(group)?;
    let integ: Integrator = integrator.parse()?;
    let lp = parse_path(path, TimeGrid::unit(intervals), DEFAULT_MARGIN)?;
    let chart = chart_for(lp.dim());
    lp.check_in_chart(&chart)?;
    let abar = parse_one_form(connection, &chart, g)?;
    Ok(to_matrix(&pathtrans::pathspace::loop_holonomy(&abar, &lp, &g.identity(), integ)?))
}

/// Runs a scenario command and returns its report as JSON. No files are written.
pub fn scenario_json(text: &str, kind: &str, target: Option<&str>) -> Result<String, String> {
    let sc = Scenario::from_toml(text, Path::new("<string>")).map_err(|e| e.to_string())?;
    let action = match kind {
        "run" => Action::Run(target.unwrap_or(&sc.run.command)),
        "verify" => Action::Verify(target.unwrap_or(&sc.verify.suite)),
        "converge" => Action::Converge(target.unwrap_or(&sc.converge.check)),
        other => return Err(format!("unknown command '{other}'")),
    };
    let report = execute(&sc, action, None).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[pyfunction]
#[pyo3(name = "exp")]
fn py_exp(group: &str, coords: Vec<f64>) -> PyResult<Matrix> {
    exp_coords(group, &coords).map_err(value_error)
}

#[pyfunction]
#[pyo3(name = "log")]
fn py_log(group: &str, matrix: Matrix) -> PyResult<Vec<f64>> {
    log_coords(group, &matrix).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (module, samples = 100, seed = 42))]
fn crossed_module_residual(module: &str, samples: usize, seed: u64) -> PyResult<f64> {
    module_residual(module, samples, seed).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (group, connection, path, intervals = 200, g0 = Vec::new(), integrator = "rk4mk"))]
fn horizontal_lift(
    py: Python<'_>,
    group: &str,
    connection: &str,
    path: &str,
    intervals: usize,
    g0: Vec<f64>,
    integrator: &str,
) -> PyResult<Lift> {
    py.detach(|| lift(group, connection, path, intervals, &g0, integrator)).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (group, connection, path, intervals = 400, integrator = "rk4mk"))]
fn loop_holonomy(py: Python<'_>, group: &str, connection: &str, path: &str, intervals: usize, integrator: &str) -> PyResult<Matrix> {
    py.detach(|| holonomy(group, connection, path, intervals, integrator)).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (scenario, suite = None))]
fn verify(py: Python<'_>, scenario: &str, suite: Option<&str>) -> PyResult<String> {
    py.detach(|| scenario_json(scenario, "verify", suite)).map_err(PyValueError::new_err)
}

#[pyfunction]
#[pyo3(signature = (scenario, command = None))]
fn run(py: Python<'_>, scenario: &str, command: Option<&str>) -> PyResult<String> {
    py.detach(|| scenario_json(scenario, "run", command)).map_err(PyValueError::new_err)
}

#[pyfunction]
#[pyo3(signature = (scenario, check = None))]
fn converge(py: Python<'_>, scenario: &str, check: Option<&str>) -> PyResult<String> {
    py.detach(|| scenario_json(scenario, "converge", check)).map_err(PyValueError::new_err)
}

#[pymodule]
#[pyo3(name = "pathtrans")]
fn pathtrans_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(py_exp, m)?)?;
    m.add_function(wrap_pyfunction!(py_log, m)?)?;
    m.add_function(wrap_pyfunction!(crossed_module_residual, m)?)?;
    m.add_function(wrap_pyfunction!(horizontal_lift, m)?)?;
    m.add_function(wrap_pyfunction!(loop_holonomy, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(converge, m)?)?;
    Ok(())
}
