//! Python bindings: a thin shell over the solver crate that keeps all the
//! numeric work in Rust and hands Python plain data.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use benders_ttf::cli::{self, SolveResult, SolverKind};
use benders_ttf::model::{self, SolverConfig};
use benders_ttf::Error;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::Format(_) | Error::InvalidInstance(_) | Error::Config(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::Numerical(_) | Error::Solver(_) | Error::SizeGuard(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
    }
}

/// A detection grouping problem: parts, detections and the cost model.
#[pyclass(frozen)]
struct Instance {
    inner: model::Instance,
}

#[pymethods]
impl Instance {
    /// Deterministic random instance; part 0 is the major star root.
    #[staticmethod]
    #[pyo3(signature = (parts, dets, scale=1.0, seed=0))]
    fn generate(parts: usize, dets: usize, scale: f64, seed: u64) -> PyResult<Instance> {
        if parts < 1 || dets < 1 {
            return Err(PyValueError::new_err("parts and dets must be at least 1"));
        }
        if !scale.is_finite() || scale <= 0.0 {
            return Err(PyValueError::new_err("scale must be positive"));
        }
        Ok(Instance { inner: model::generate_instance(parts, dets, scale, seed) })
    }

    /// Reads and validates an instance file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Instance> {
        Ok(Instance { inner: model::load_instance(&path).map_err(to_py_err)? })
    }

    /// Parses and validates an instance from a JSON string.
    #[staticmethod]
    fn loads(text: &str) -> PyResult<Instance> {
        Ok(Instance { inner: model::instance_from_json(text).map_err(to_py_err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        model::save_instance(&self.inner, &path).map_err(to_py_err)
    }

    fn to_json(&self) -> String {
        model::instance_to_json(&self.inner)
    }

    /// Non-fatal modelling caveats, if any.
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn n_parts(&self) -> usize {
        self.inner.n_parts()
    }

    #[getter]
    fn n_detections(&self) -> usize {
        self.inner.n_detections()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(name={:?}, parts={}, detections={})",
            self.inner.name,
            self.inner.n_parts(),
            self.inner.n_detections()
        )
    }
}

/// An integral grouping plus the bound and run statistics behind it.
#[pyclass(frozen)]
struct Solution {
    inner: SolveResult,
}

#[pymethods]
impl Solution {
    #[getter]
    fn objective(&self) -> f64 {
        self.inner.solution.objective
    }

    #[getter]
    fn lower_bound(&self) -> f64 {
        self.inner.lower_bound
    }

    /// Poses as `(skeleton_ids, [(global_id, [local_ids, ...]), ...])`.
    #[getter]
    fn poses(&self) -> Vec<(Vec<usize>, Vec<(usize, Vec<usize>)>)> {
        self.inner
            .solution
            .poses()
            .into_iter()
            .map(|p| {
                (
                    p.skeleton.iter().map(|d| d.0).collect(),
                    p.locals
                        .into_iter()
                        .map(|(g, ls)| (g.0, ls.iter().map(|d| d.0).collect()))
                        .collect(),
                )
            })
            .collect()
    }

    /// Per-iteration `(iteration, objective, lower_bound, seconds)` records.
    #[getter]
    fn trace(&self) -> Vec<(usize, f64, f64, f64)> {
        self.inner
            .trace
            .iter()
            .map(|r| (r.iter, r.objective, r.lower_bound, r.wall_time))
            .collect()
    }

    #[getter]
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = &self.inner.stats;
        let d = PyDict::new(py);
        d.set_item("solver", s.solver.name())?;
        d.set_item("iterations", s.iterations)?;
        d.set_item("time_s", s.time_s)?;
        d.set_item("n_columns", s.n_columns)?;
        d.set_item("n_rows", s.n_rows)?;
        d.set_item("timed_out", s.timed_out)?;
        d.set_item("lp_objective", s.lp_objective)?;
        d.set_item("row_based_objective", s.row_based_objective)?;
        Ok(d)
    }

    fn to_json(&self) -> String {
        cli::solution_to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(objective={}, lower_bound={}, poses={})",
            self.inner.solution.objective,
            self.inner.lower_bound,
            self.inner.solution.poses().len()
        )
    }
}

/// Solves an instance with the chosen solver: "bcg" (decomposition, the
/// default), "pcg" (pure column generation) or "oracle" (exhaustive).
#[pyfunction]
#[pyo3(signature = (instance, solver="bcg", time_cap=300.0, max_locals=None))]
fn solve(
    py: Python<'_>,
    instance: &Instance,
    solver: &str,
    time_cap: f64,
    max_locals: Option<usize>,
) -> PyResult<Solution> {
    let kind = match solver {
        "bcg" => SolverKind::Bcg,
        "pcg" => SolverKind::Pcg,
        "oracle" => SolverKind::Oracle,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown solver {other:?}; expected \"bcg\", \"pcg\" or \"oracle\""
            )))
        }
    };
    let mut config = SolverConfig { time_cap_seconds: time_cap, ..Default::default() };
    if let Some(k) = max_locals {
        config.max_locals_per_assignment = k;
    }
    config.check().map_err(to_py_err)?;
    let result = py
        .detach(|| cli::solve_instance(&instance.inner, kind, &config))
        .map_err(to_py_err)?;
    Ok(Solution { inner: result })
}

#[pymodule]
fn benders_ttf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    Ok(())
}
