//! Python bindings: profiles, Riemann solves, oracles and scenario runs.

use std::path::PathBuf;

use fronttrack::analysis::{damped_ramp_l1_error, damped_ramp_exact};
use fronttrack::bv::total_variation;
use fronttrack::scenario::{execute, run_sweep_scenario, write_artifacts, RunOutcome};
use fronttrack::{AtomicMeasure2D, FluxModel, Profile, RunOptions, Scenario};
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: fronttrack::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn flux_model(name: &str, range: Option<(f64, f64)>) -> PyResult<FluxModel> {
    let r = range.unwrap_or((-4.0, 4.0));
    match name {
        "burgers" => Ok(match range {
            Some(r) => FluxModel::burgers_on(r),
            None => FluxModel::burgers(),
        }),
        "cubic" => FluxModel::cubic(r).map_err(py_err),
        "quartic" => FluxModel::quartic(r).map_err(py_err),
        other => Err(PyValueError::new_err(format!("unknown flux '{other}'"))),
    }
}

/// Right-continuous piecewise-constant function.
#[pyclass(name = "Profile", module = "fronttrack_py", frozen)]
struct PyProfile {
    inner: Profile,
}

#[pymethods]
impl PyProfile {
    #[new]
    fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: Profile::new(breakpoints, values).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Profile::from_csv(text).map_err(py_err)?,
        })
    }

    #[getter]
    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn value_at(&self, x: f64) -> f64 {
        self.inner.value_at(x)
    }

    fn total_variation(&self) -> f64 {
        total_variation(&self.inner)
    }

    fn l1_distance(&self, other: &PyProfile) -> f64 {
        self.inner.l1_distance(&other.inner)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.jump_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Profile(jumps={}, tv={:.6})",
            self.inner.jump_count(),
            total_variation(&self.inner)
        )
    }
}

/// Waves of the front-tracking Riemann solver as `(left, right, speed, kind)`.
#[pyfunction]
#[pyo3(signature = (u_l, u_r, epsilon, flux = "burgers", range = None))]
fn solve_riemann(
    u_l: f64,
    u_r: f64,
    epsilon: f64,
    flux: &str,
    range: Option<(f64, f64)>,
) -> PyResult<Vec<(f64, f64, f64, String)>> {
    let f = flux_model(flux, range)?;
    let fan = fronttrack::riemann::solve_riemann(u_l, u_r, &f, epsilon).map_err(py_err)?;
    Ok(fan
        .waves
        .iter()
        .map(|w| (w.left, w.right, w.speed, format!("{:?}", w.kind).to_lowercase()))
        .collect())
}

#[pyfunction]
fn oracle_burgers_riemann(u_l: f64, u_r: f64, t: f64, x: f64) -> f64 {
    fronttrack::oracle_burgers_riemann(u_l, u_r, t, x)
}

#[pyfunction]
fn oracle_damped_burgers_ramp(x: f64, t: f64) -> PyResult<f64> {
    fronttrack::oracle_damped_burgers_ramp(x, t).map_err(py_err)
}

/// Damped ramp evaluated everywhere, including the constant tails.
#[pyfunction]
fn damped_ramp(x: f64, t: f64) -> f64 {
    damped_ramp_exact(x, t)
}

#[pyfunction]
#[pyo3(signature = (profile, t, a = -3.0, b = 3.0))]
fn damped_ramp_error(profile: &PyProfile, t: f64, a: f64, b: f64) -> f64 {
    damped_ramp_l1_error(&profile.inner, t, a, b)
}

fn atoms(m: &AtomicMeasure2D) -> Vec<(f64, f64, f64, String)> {
    m.atoms
        .iter()
        .map(|a| (a.t, a.x, a.weight, a.tag.as_str().to_string()))
        .collect()
}

/// Result of one scenario run.
#[pyclass(name = "Run", module = "fronttrack_py", frozen)]
struct PyRun {
    outcome: RunOutcome,
}

#[pymethods]
impl PyRun {
    #[getter]
    fn passed(&self) -> bool {
        self.outcome.pass()
    }

    /// `(name, pass, detail)` for every check.
    #[getter]
    fn checks(&self) -> Vec<(String, bool, String)> {
        self.outcome
            .checks
            .iter()
            .map(|c| (c.name.clone(), c.pass, c.detail.clone()))
            .collect()
    }

    #[getter]
    fn final_profile(&self) -> PyProfile {
        PyProfile {
            inner: self.outcome.run.final_profile.clone(),
        }
    }

    fn profile_at(&self, t: f64) -> PyProfile {
        PyProfile {
            inner: self.outcome.run.profile_at(t),
        }
    }

    #[getter]
    fn oracle_error(&self) -> Option<f64> {
        self.outcome.oracle.as_ref().map(|o| o.l1_error)
    }

    #[getter]
    fn jump_count(&self) -> Option<usize> {
        self.outcome.family.as_ref().map(|f| f.m_count)
    }

    #[getter]
    fn event_count(&self) -> usize {
        self.outcome.run.log.len()
    }

    /// `(t, tv, upsilon)` along the run.
    #[getter]
    fn functionals(&self) -> Vec<(f64, f64, f64)> {
        self.outcome.run.trace.iter().map(|e| (e.t, e.tv, e.upsilon)).collect()
    }

    /// Atoms `(t, x, weight, tag)` of `mu`, `mu_jump`, `mu_cont`,
    /// `mu_source`, `xi`, `xi_jump` or `xi_cont`.
    fn measure(&self, name: &str) -> PyResult<Vec<(f64, f64, f64, String)>> {
        let m = self
            .outcome
            .measures
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("measures were not computed for this run"))?;
        let pick = match name {
            "mu" => &m.mu,
            "mu_jump" => &m.mu_jump,
            "mu_cont" => &m.mu_cont,
            "mu_source" => &m.mu_source,
            "xi" => &m.xi.xi,
            "xi_jump" => &m.xi.xi_jump,
            "xi_cont" => &m.xi.xi_cont,
            other => return Err(PyKeyError::new_err(other.to_string())),
        };
        Ok(atoms(pick))
    }

    fn __repr__(&self) -> String {
        format!(
            "Run(events={}, passed={})",
            self.outcome.run.log.len(),
            self.outcome.pass()
        )
    }
}

/// Scenario file.
#[pyclass(name = "Scenario", module = "fronttrack_py", frozen)]
struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: Scenario::load(&path).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Scenario::from_json(text).map_err(py_err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }

    #[getter]
    fn t_final(&self) -> f64 {
        self.inner.t_final
    }

    /// Runs at the nominal resolution, writing artifacts when `out_dir` is
    /// given.
    #[pyo3(signature = (out_dir = None, strict = false))]
    fn run(&self, py: Python<'_>, out_dir: Option<PathBuf>, strict: bool) -> PyResult<PyRun> {
        let s = &self.inner;
        let outcome = py
            .detach(|| -> fronttrack::Result<RunOutcome> {
                let (cfg, datum) = s.config()?;
                let o = execute(s, &cfg, &datum, strict)?;
                if let Some(dir) = &out_dir {
                    write_artifacts(dir, s, &o)?;
                }
                Ok(o)
            })
            .map_err(py_err)?;
        Ok(PyRun { outcome })
    }

    /// Runs the refinement sweep and returns its report as a dict.
    #[pyo3(signature = (out_dir = None, jobs = None))]
    fn sweep(&self, py: Python<'_>, out_dir: Option<PathBuf>, jobs: Option<usize>) -> PyResult<Py<PyAny>> {
        let opts = RunOptions {
            jobs,
            ..Default::default()
        };
        let s = &self.inner;
        let report = py
            .detach(|| run_sweep_scenario(s, out_dir.as_deref(), &opts))
            .map_err(py_err)?;
        let text = serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
    }
}

#[pymodule]
fn fronttrack_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProfile>()?;
    m.add_class::<PyRun>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(solve_riemann, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_burgers_riemann, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_damped_burgers_ramp, m)?)?;
    m.add_function(wrap_pyfunction!(damped_ramp, m)?)?;
    m.add_function(wrap_pyfunction!(damped_ramp_error, m)?)?;
    Ok(())
}
