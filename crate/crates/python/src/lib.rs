//! Python bindings: trajectory measurements, the tracking filters, the GOSPA
//! metric, ranked assignment, and experiment execution.
//!
//! Build with `cargo build -p tm-pmbm-py` and import the produced cdylib as
//! `tm_pmbm_py` (see `python/smoke_test.py` at the repository root).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use nalgebra::{DMatrix, DVector};

use tm_pmbm::assoc;
use tm_pmbm::baseline::{baseline_step, BaselineConfig};
use tm_pmbm::config::spec_from_toml;
use tm_pmbm::experiment::{run_monte_carlo, FilterKind, SweepCell};
use tm_pmbm::filter::{step, FilterConfig};
use tm_pmbm::gaussian::{kalman_update, Gaussian, LinearObservation};
use tm_pmbm::gospa;
use tm_pmbm::pmbm::PmbmState;
use tm_pmbm::report::write_experiment_outputs;
use tm_pmbm::sim::ScenarioKind;
use tm_pmbm::trajectory::TrajectoryMeasurement;

fn to_py_err(e: tm_pmbm::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn vector(v: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(v)
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("ragged matrix rows"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// A trajectory measurement: a detection at the window start, at the window
/// end, or at both ends.
#[pyclass(name = "Measurement", from_py_object)]
#[derive(Clone)]
struct PyMeasurement {
    inner: TrajectoryMeasurement,
}

#[pymethods]
impl PyMeasurement {
    /// Detection at the window start only.
    #[staticmethod]
    fn first_only(z: Vec<f64>) -> Self {
        Self {
            inner: TrajectoryMeasurement::first_only(vector(z)),
        }
    }

    /// Detection at the window end only.
    #[staticmethod]
    fn last_only(z: Vec<f64>) -> Self {
        Self {
            inner: TrajectoryMeasurement::last_only(vector(z)),
        }
    }

    /// Detections at both window boundaries.
    #[staticmethod]
    fn full(z_first: Vec<f64>, z_last: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: TrajectoryMeasurement::full(vector(z_first), vector(z_last))
                .map_err(to_py_err)?,
        })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().label()
    }

    #[getter]
    fn z_first(&self) -> Option<Vec<f64>> {
        self.inner.z_first().map(|z| z.as_slice().to_vec())
    }

    #[getter]
    fn z_last(&self) -> Option<Vec<f64>> {
        self.inner.z_last().map(|z| z.as_slice().to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "Measurement(kind={:?}, z_first={:?}, z_last={:?})",
            self.inner.kind().label(),
            self.z_first(),
            self.z_last()
        )
    }
}

enum TrackerEngine {
    Trajectory(FilterConfig),
    Baseline(BaselineConfig),
}

/// A PMBM/PMB tracking filter over two-step trajectory measurements.
///
/// `filter` selects the engine: "tm-pmbm" and "tm-pmb" consume trajectory
/// measurements directly; "pmbm" and "pmb" are the point-measurement
/// baselines that use only window-end detections.
#[pyclass(name = "Tracker")]
struct PyTracker {
    engine: TrackerEngine,
    state: PmbmState,
    initial: PmbmState,
}

#[pymethods]
impl PyTracker {
    #[new]
    #[pyo3(signature = (scenario="scenario1", filter="tm-pmbm", window_length=7,
                        full_detect_prob=0.7, clutter_rate=10.0, detect_prob=0.9))]
    fn new(
        scenario: &str,
        filter: &str,
        window_length: u32,
        full_detect_prob: f64,
        clutter_rate: f64,
        detect_prob: f64,
    ) -> PyResult<Self> {
        let scenario = ScenarioKind::parse(scenario).map_err(to_py_err)?;
        let kind = FilterKind::parse(filter).map_err(to_py_err)?;
        let mut spec = tm_pmbm::experiment::ExperimentSpec::defaults(scenario);
        spec.detect_prob = detect_prob;
        let cell = SweepCell {
            n_w: window_length,
            full_detect_prob,
            clutter_rate,
        };
        let traj_cfg = spec
            .trajectory_config(&cell, kind.variant())
            .map_err(to_py_err)?;
        let engine = if kind.uses_trajectory_measurements() {
            TrackerEngine::Trajectory(traj_cfg)
        } else {
            TrackerEngine::Baseline(
                BaselineConfig::from_trajectory_config(&traj_cfg, kind.variant())
                    .map_err(to_py_err)?,
            )
        };
        let initial = spec.initial_state();
        Ok(Self {
            engine,
            state: initial.clone(),
            initial,
        })
    }

    /// Process one window's measurement set; returns the estimated target
    /// states (full state vectors) at the window end.
    fn step(&mut self, measurements: Vec<PyMeasurement>) -> PyResult<Vec<Vec<f64>>> {
        let zs: Vec<TrajectoryMeasurement> =
            measurements.into_iter().map(|m| m.inner).collect();
        let out = match &self.engine {
            TrackerEngine::Trajectory(cfg) => step(&self.state, &zs, cfg),
            TrackerEngine::Baseline(cfg) => baseline_step(&self.state, &zs, cfg),
        }
        .map_err(to_py_err)?;
        self.state = out.posterior;
        Ok(out
            .estimates
            .iter()
            .map(|x| x.as_slice().to_vec())
            .collect())
    }

    /// `(total single-target hypotheses, global hypotheses)` of the posterior.
    fn hypothesis_counts(&self) -> (usize, usize) {
        self.state.hypothesis_counts()
    }

    /// Structured text dump of the hypothesis tree.
    fn report(&self) -> String {
        self.state.hypothesis_report()
    }

    /// Reset to the initial prior.
    fn reset(&mut self) {
        self.state = self.initial.clone();
    }
}

/// GOSPA distance (alpha = 2) between two point sets; returns
/// `(total, localisation, missed, false_targets)`.
#[pyfunction]
#[pyo3(signature = (truth, estimates, cutoff=10.0, order=2.0))]
fn gospa_distance(
    truth: Vec<Vec<f64>>,
    estimates: Vec<Vec<f64>>,
    cutoff: f64,
    order: f64,
) -> (f64, f64, f64, f64) {
    let truth: Vec<DVector<f64>> = truth.into_iter().map(vector).collect();
    let est: Vec<DVector<f64>> = estimates.into_iter().map(vector).collect();
    let r = gospa::gospa(&truth, &est, cutoff, order);
    (r.total, r.localisation, r.missed, r.false_targets)
}

/// The `k` lowest-cost assignments of rows to distinct columns, as
/// `(assignment, cost)` pairs in nondecreasing cost order. Use `inf` entries
/// for inadmissible pairings.
#[pyfunction]
fn murty(costs: Vec<Vec<f64>>, k: usize) -> PyResult<Vec<(Vec<usize>, f64)>> {
    assoc::murty_kbest(&matrix(costs)?, k).map_err(to_py_err)
}

/// Linear-Gaussian measurement update; returns
/// `(posterior_mean, posterior_cov, likelihood)`.
#[pyfunction]
fn kalman(
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
    obs_matrix: Vec<Vec<f64>>,
    noise_cov: Vec<Vec<f64>>,
    z: Vec<f64>,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, f64)> {
    let prior = Gaussian::new(vector(mean), matrix(cov)?).map_err(to_py_err)?;
    let obs = LinearObservation::new(matrix(obs_matrix)?, matrix(noise_cov)?)
        .map_err(to_py_err)?;
    let (post, lik) = kalman_update(&prior, &obs, &vector(z)).map_err(to_py_err)?;
    let n = post.dim();
    let cov_rows = (0..n)
        .map(|i| (0..n).map(|j| post.cov()[(i, j)]).collect())
        .collect();
    Ok((post.mean().as_slice().to_vec(), cov_rows, lik))
}

/// Run a Monte-Carlo experiment from TOML config text and write the four CSV
/// files into `out_dir`. Returns the paths written.
#[pyfunction]
#[pyo3(signature = (config_toml, out_dir, runs=None, seed=None))]
fn run_experiment(
    config_toml: &str,
    out_dir: &str,
    runs: Option<u32>,
    seed: Option<u64>,
) -> PyResult<Vec<String>> {
    let mut spec = spec_from_toml(config_toml).map_err(to_py_err)?;
    if let Some(runs) = runs {
        spec.runs = runs;
    }
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    spec.validate().map_err(to_py_err)?;
    let results = run_monte_carlo(&spec).map_err(to_py_err)?;
    let paths = write_experiment_outputs(std::path::Path::new(out_dir), &results)
        .map_err(to_py_err)?;
    Ok(paths.iter().map(|p| p.display().to_string()).collect())
}

#[pymodule]
fn tm_pmbm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMeasurement>()?;
    m.add_class::<PyTracker>()?;
    m.add_function(wrap_pyfunction!(gospa_distance, m)?)?;
    m.add_function(wrap_pyfunction!(murty, m)?)?;
    m.add_function(wrap_pyfunction!(kalman, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
