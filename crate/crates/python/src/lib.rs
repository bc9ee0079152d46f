//! Python bindings: mesh generation, the coercivity probe, single solves and
//! convergence studies.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sfvem::assembly::{energy_error, solve_problem, DiscreteSolution, Discretization, Method, ProbeCache};
use sfvem::labcli::{problem_by_name, probe_mesh, run_convergence, EllMode, ExperimentConfig, Family};
use sfvem::polymesh::{mesh_from_json, mesh_to_json, ElementGeometry, PolyMesh};
use sfvem::sfsupg::{probe_min_ell as probe_cell, StabilizationScale, DEFAULT_ELL_MAX, DEFAULT_PROBE_TOL};
use sfvem::{Point, VemError};

fn py_err(e: VemError) -> PyErr {
    match e {
        VemError::InvalidArgument(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = VemError>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// Polygonal mesh of the unit square.
#[pyclass(name = "Mesh", module = "pysfvem")]
#[derive(Clone)]
struct PyMesh {
    inner: PolyMesh,
}

#[pymethods]
impl PyMesh {
    /// Mesh of family `t1`, `t2` or `t3` at refinement parameter `n`.
    #[staticmethod]
    #[pyo3(signature = (family, n, seed = 42))]
    fn generate(family: &str, n: usize, seed: u64) -> PyResult<Self> {
        let family: Family = parse(family)?;
        Ok(Self { inner: family.mesh(n, seed, 0).map_err(py_err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: mesh_from_json(text).map_err(py_err)? })
    }

    fn to_json(&self) -> String {
        mesh_to_json(&self.inner)
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.inner.n_cells()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    #[getter]
    fn h_max(&self) -> f64 {
        self.inner.h_max()
    }

    #[getter]
    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|p| (p.x, p.y)).collect()
    }

    #[getter]
    fn cells(&self) -> Vec<Vec<usize>> {
        self.inner.cells().to_vec()
    }

    fn cell_area(&self, c: usize) -> PyResult<f64> {
        if c >= self.inner.n_cells() {
            return Err(PyValueError::new_err(format!("cell {c} out of range")));
        }
        Ok(self.inner.cell_area(c))
    }

    fn __repr__(&self) -> String {
        format!("Mesh(n_vertices={}, n_cells={})", self.inner.n_vertices(), self.inner.n_cells())
    }
}

/// Result of a single solve.
#[pyclass(name = "Solution", module = "pysfvem")]
struct PySolution {
    mesh: PolyMesh,
    disc: Discretization,
    solution: DiscreteSolution,
    #[pyo3(get)]
    energy_error: Option<f64>,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn dofs(&self) -> Vec<f64> {
        self.solution.dofs.clone()
    }

    #[getter]
    fn ells(&self) -> Vec<usize> {
        self.disc.ells()
    }

    #[getter]
    fn n_dofs(&self) -> usize {
        self.disc.dofmap.n_dofs()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.solution.report.residual
    }

    #[getter]
    fn mean_peclet(&self) -> f64 {
        self.disc.mean_peclet()
    }

    /// Vertex values of the discrete solution.
    #[getter]
    fn vertex_values(&self) -> Vec<f64> {
        self.solution.dofs[..self.mesh.n_vertices()].to_vec()
    }

    /// Value of the local polynomial reconstruction at `(x, y)`, or `None`
    /// outside the domain.
    fn eval(&self, x: f64, y: f64) -> Option<f64> {
        self.solution.eval(&self.mesh, &self.disc, Point::new(x, y))
    }
}

/// Minimal projection-degree increment for a single polygon.
#[pyfunction]
#[pyo3(signature = (vertices, k, ell_max = DEFAULT_ELL_MAX, tol = DEFAULT_PROBE_TOL))]
fn probe_min_ell(vertices: Vec<(f64, f64)>, k: usize, ell_max: usize, tol: f64) -> PyResult<usize> {
    let pts: Vec<Point> = vertices.iter().map(|&(x, y)| Point::new(x, y)).collect();
    let geom = ElementGeometry::new(0, &pts, k).map_err(py_err)?;
    Ok(probe_cell(&geom, k, ell_max, tol).map_err(py_err)?.ell)
}

/// Probed `ell` per vertex count on a mesh, as a list of dicts.
#[pyfunction]
#[pyo3(signature = (mesh, ks, family = "t1", ell_max = DEFAULT_ELL_MAX, tol = DEFAULT_PROBE_TOL))]
fn probe_table<'py>(
    py: Python<'py>,
    mesh: &PyMesh,
    ks: Vec<usize>,
    family: &str,
    ell_max: usize,
    tol: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let family: Family = parse(family)?;
    let entries = probe_mesh(&mesh.inner, family, &ks, ell_max, tol).map_err(py_err)?;
    entries
        .iter()
        .map(|e| {
            let d = PyDict::new(py);
            d.set_item("n_vertices", e.n_vertices)?;
            d.set_item("k", e.k)?;
            d.set_item("ell", e.ell)?;
            d.set_item("cells", e.cells)?;
            d.set_item("distinct_shapes", e.distinct_shapes)?;
            Ok(d)
        })
        .collect()
}

/// Solve a built-in problem on `mesh`.
#[pyfunction]
#[pyo3(signature = (mesh, problem = "smooth", k = 1, kappa = None, ell = "auto", baseline = false))]
fn solve(mesh: &PyMesh, problem: &str, k: usize, kappa: Option<f64>, ell: &str, baseline: bool) -> PyResult<PySolution> {
    let data = problem_by_name(problem, kappa).map_err(py_err)?;
    let mut config = ExperimentConfig::new(problem, Family::T1, k);
    config.ell = parse::<EllMode>(ell)?;
    config.kappa = kappa;
    config.validate().map_err(py_err)?;
    let method = if baseline {
        Method::Baseline(StabilizationScale::default())
    } else {
        Method::StabilizationFree
    };
    let mesh = mesh.inner.clone();
    let (disc, solution) =
        solve_problem(&mesh, &data, k, method, &config.ell_policy(), &mut ProbeCache::default()).map_err(py_err)?;
    let energy_error = match &data.exact {
        Some(exact) => Some(energy_error(&disc, &solution, &data, &*exact.grad).map_err(py_err)?),
        None => None,
    };
    Ok(PySolution { mesh, disc, solution, energy_error })
}

/// Convergence study; returns one dict per refinement level.
#[pyfunction]
#[pyo3(signature = (problem = "smooth", family = "t1", k = 1, refinements = None, kappa = None, ell = "auto", baseline = false, seed = 42))]
#[allow(clippy::too_many_arguments)]
fn convergence<'py>(
    py: Python<'py>,
    problem: &str,
    family: &str,
    k: usize,
    refinements: Option<Vec<usize>>,
    kappa: Option<f64>,
    ell: &str,
    baseline: bool,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let family: Family = parse(family)?;
    let mut config = ExperimentConfig::new(problem, family, k);
    if let Some(r) = refinements {
        config.refinements = r;
    }
    config.kappa = kappa;
    config.ell = parse::<EllMode>(ell)?;
    config.baseline = baseline;
    config.seed = seed;
    let report = py
        .detach(|| run_convergence(&config, &mut std::io::sink()))
        .map_err(py_err)?;
    report
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let d = PyDict::new(py);
            d.set_item("level", r.level)?;
            d.set_item("h_max", r.h_max)?;
            d.set_item("n_dof", r.n_dof)?;
            d.set_item("err_sf", r.err_sf)?;
            d.set_item("err_vem", r.err_vem)?;
            d.set_item("mean_pe", r.mean_pe)?;
            d.set_item("alpha_sf", report.alpha_sf_at(i))?;
            d.set_item("alpha_vem", report.alpha_vem_at(i))?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn pysfvem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(probe_min_ell, m)?)?;
    m.add_function(wrap_pyfunction!(probe_table, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    Ok(())
}
