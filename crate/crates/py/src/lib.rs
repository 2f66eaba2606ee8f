//! Python bindings: kinematic model, simulated plant, datasets, estimation,
//! the compensation controller and the validation metrics.

use std::path::PathBuf;

use gravcomp::estimation::{self, Method};
use gravcomp::excitation::{self, CollectionRanges};
use gravcomp::files::{self, ModelFile};
use gravcomp::gcc;
use gravcomp::metrics::{self, HoldSchedule};
use gravcomp::plant;
use gravcomp::{DirectionTag, DisturbanceBasis, GccConfig, GravityConstants, GravityRegressorSpec};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(gravcomp_py, IdentifiabilityError, PyException);

fn err(e: gravcomp::Error) -> PyErr {
    match e {
        gravcomp::Error::Identifiability { .. } | gravcomp::Error::IllConditionedProbes { .. } => {
            IdentifiabilityError::new_err(e.to_string())
        }
        gravcomp::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn tags(dirs: &[i64]) -> PyResult<Vec<DirectionTag>> {
    dirs.iter()
        .map(|&d| {
            DirectionTag::from_sign(d).ok_or_else(|| PyValueError::new_err(format!("direction {d} is not +1 or -1")))
        })
        .collect()
}

#[pyclass(name = "KinematicModel", module = "gravcomp_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyKinematicModel {
    inner: gravcomp::KinematicModel,
}

#[pymethods]
impl PyKinematicModel {
    /// The built-in six-joint MTM-like model.
    #[staticmethod]
    fn mtm_default() -> Self {
        Self {
            inner: gravcomp::KinematicModel::mtm_default(),
        }
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: files::read_kinematic_model(&path).map_err(err)?,
        })
    }

    #[getter]
    fn n_joints(&self) -> usize {
        self.inner.n_joints
    }

    /// `(lo, hi)` per joint, radians.
    #[getter]
    fn limits(&self) -> Vec<(f64, f64)> {
        self.inner.limits.iter().map(|l| (l.lo, l.hi)).collect()
    }

    fn hash(&self) -> String {
        files::model_hash(&self.inner)
    }

    /// End-effector pose as a row-major 4x4 nested list.
    fn end_effector(&self, q: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let t = self.inner.end_effector(&q).map_err(err)?;
        Ok((0..4).map(|r| (0..4).map(|c| t[(r, c)]).collect()).collect())
    }

    fn random_poses(&self, count: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        plant::random_poses(&self.inner, count, seed).map_err(err)
    }

    fn to_toml(&self) -> String {
        files::kinematic_model_to_toml(&self.inner)
    }
}

#[pyclass(name = "Dataset", module = "gravcomp_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyDataset {
    inner: estimation::Dataset,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: files::read_dataset(&path).map_err(err)?,
        })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        let n = self.inner.samples.first().map_or(0, |s| s.q.len());
        files::write_dataset(&path, &self.inner, n).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// 1-based estimated joint, if the dataset was collected for one.
    #[getter]
    fn estimated_joint(&self) -> Option<usize> {
        self.inner.meta.estimated_joint.map(|j| j + 1)
    }

    #[getter]
    fn q(&self) -> Vec<Vec<f64>> {
        self.inner.samples.iter().map(|s| s.q.clone()).collect()
    }

    #[getter]
    fn dirs(&self) -> Vec<Vec<i64>> {
        self.inner
            .samples
            .iter()
            .map(|s| s.dir.iter().map(|d| d.sign() as i64).collect())
            .collect()
    }

    #[getter]
    fn tau(&self) -> Vec<Vec<f64>> {
        self.inner.samples.iter().map(|s| s.tau.clone()).collect()
    }
}

#[pyclass(name = "Plant", module = "gravcomp_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyPlant {
    inner: gravcomp::PlantSpec,
}

#[pymethods]
impl PyPlant {
    /// MTM-like plant with order-4 disturbances.
    #[staticmethod]
    #[pyo3(signature = (seed=0, noise_sigma=0.0))]
    fn in_class(seed: u64, noise_sigma: f64) -> Self {
        Self {
            inner: gravcomp::PlantSpec::mtm_in_class(seed, noise_sigma),
        }
    }

    /// MTM-like plant with order-6 disturbances.
    #[staticmethod]
    #[pyo3(signature = (seed=0, noise_sigma=0.0))]
    fn order6(seed: u64, noise_sigma: f64) -> Self {
        Self {
            inner: gravcomp::PlantSpec::mtm_order6(seed, noise_sigma),
        }
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: files::read_plant_spec(&path).map_err(err)?,
        })
    }

    #[getter]
    fn model(&self) -> PyKinematicModel {
        PyKinematicModel {
            inner: self.inner.model.clone(),
        }
    }

    #[getter]
    fn noise_sigma(&self) -> f64 {
        self.inner.noise_sigma
    }

    /// Noise-free holding torque for the given directions (+1/-1 per joint).
    fn true_torque(&self, q: Vec<f64>, dirs: Vec<i64>) -> PyResult<Vec<f64>> {
        let t = self.inner.true_torque(&q, &tags(&dirs)?).map_err(err)?;
        Ok(t.iter().copied().collect())
    }

    /// Two-joint collection for `joint` (1-based); the noise stream is the
    /// joint index, as in the command-line tool.
    #[pyo3(signature = (joint, counts=(30, 20)))]
    fn collect(&self, joint: usize, counts: (usize, usize)) -> PyResult<PyDataset> {
        let n = self.inner.model.n_joints;
        if !(1..=n).contains(&joint) {
            return Err(PyValueError::new_err(format!("joint must be in 1..={n}")));
        }
        let j = joint - 1;
        let ranges = CollectionRanges::mtm_table();
        if ranges.n_joints() != n {
            return Err(PyValueError::new_err("collection ranges only cover six-joint plants"));
        }
        let c = if ranges.auxiliary[j].is_some() {
            counts
        } else {
            (counts.0 * counts.1, 1)
        };
        let plan = excitation::two_joint_plan(&self.inner.model, j, &ranges, c, None).map_err(err)?;
        let ds = plant::Plant::with_stream(&self.inner, j as u64)
            .and_then(|mut p| p.collect(&plan))
            .map_err(err)?;
        Ok(PyDataset { inner: ds })
    }
}

#[pyclass(name = "Model", module = "gravcomp_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyModel {
    inner: ModelFile,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: files::read_model_file(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        files::write_model_file(&path, &self.inner).map_err(err)
    }

    fn to_toml(&self) -> String {
        files::model_file_to_toml(&self.inner)
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.inner.params.provenance.method.label()
    }

    #[getter]
    fn base_count(&self) -> usize {
        self.inner.params.gravity.base_count()
    }

    #[getter]
    fn gravity_base(&self) -> Vec<f64> {
        self.inner.params.gravity_base.iter().copied().collect()
    }

    #[getter]
    fn orders(&self) -> Vec<usize> {
        self.inner.params.disturbance.basis.orders.clone()
    }

    /// Predicted holding torque for the given directions.
    fn predict(&self, q: Vec<f64>, dirs: Vec<i64>) -> PyResult<Vec<f64>> {
        let t = self
            .inner
            .params
            .predict(&self.inner.model, &q, &tags(&dirs)?)
            .map_err(err)?;
        Ok(t.iter().copied().collect())
    }

    /// Controller torque for configuration `q` and joint difference `dq`.
    fn compensation_torque(&self, q: Vec<f64>, dq: Vec<f64>) -> PyResult<Vec<f64>> {
        let m = &self.inner;
        let t = gcc::compensation_torque(&m.model, &m.params, &m.gcc, &q, &dq).map_err(err)?;
        Ok(t.iter().copied().collect())
    }

    /// Per-step `(joint or None, rows, params, rms residual, condition)`.
    fn steps(&self) -> Vec<(Option<usize>, usize, usize, f64, f64)> {
        self.inner
            .params
            .provenance
            .steps
            .iter()
            .map(|s| (s.joint.map(|j| j + 1), s.rows, s.params, s.rms_residual(), s.condition))
            .collect()
    }
}

/// Estimates a model from datasets. `method` is `mlse` (one dataset per
/// joint, in joint order), `slse` or `fontanelli-like`.
#[pyfunction]
#[pyo3(signature = (model, datasets, method="mlse", orders=None))]
fn estimate(
    model: &PyKinematicModel,
    datasets: Vec<PyRef<'_, PyDataset>>,
    method: &str,
    orders: Option<Vec<usize>>,
) -> PyResult<PyModel> {
    let km = &model.inner;
    let method = Method::parse(method).ok_or_else(|| PyValueError::new_err(format!("unknown method `{method}`")))?;
    let orders = orders.unwrap_or_else(|| DisturbanceBasis::mtm_default().orders);
    let basis = DisturbanceBasis::new(orders);
    let probes = plant::random_poses(km, 500, 1).map_err(err)?;
    let spec = GravityRegressorSpec::reduce_to_base(km, &probes, GravityConstants::default()).map_err(err)?;
    let data: Vec<estimation::Dataset> = datasets.iter().map(|d| d.inner.clone()).collect();
    let params = match method {
        Method::Mlse => estimation::mlse(km, &data, &spec, &basis),
        Method::Slse => estimation::slse(km, &estimation::Dataset::concat(&data), &spec, &basis),
        Method::FontanelliLike => estimation::slse_symmetric_linear(km, &estimation::Dataset::concat(&data), &spec),
    }
    .map_err(err)?;
    Ok(PyModel {
        inner: ModelFile {
            model: km.clone(),
            params,
            gcc: GccConfig::default_for(km.n_joints),
        },
    })
}

/// Trajectory test; returns per-joint `rms_relative_pct`, `rms_abs`, `max_abs`.
#[pyfunction]
#[pyo3(signature = (plant, model, waypoints=10, seed=0))]
fn trajectory_test<'py>(
    py: Python<'py>,
    plant: &PyPlant,
    model: &PyModel,
    waypoints: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = &plant.inner;
    let wps = plant::random_poses(&spec.model, waypoints, seed).map_err(err)?;
    let mut p = plant::Plant::with_stream(spec, 100).map_err(err)?;
    let rep = metrics::trajectory_test(&mut p, &model.inner.params, &wps, HoldSchedule::default()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item(
        "rms_relative_pct",
        rep.joints.iter().map(|j| j.rms_relative_pct).collect::<Vec<_>>(),
    )?;
    d.set_item("rms_abs", rep.joints.iter().map(|j| j.rms_abs).collect::<Vec<_>>())?;
    d.set_item("max_abs", rep.joints.iter().map(|j| j.max_abs).collect::<Vec<_>>())?;
    Ok(d)
}

/// Drift test; returns mean/std of translational (m) and rotational (deg) drift.
#[pyfunction]
#[pyo3(signature = (plant, model, poses=400, duration=2.0, seed=0))]
fn drift_test<'py>(
    py: Python<'py>,
    plant: &PyPlant,
    model: &PyModel,
    poses: usize,
    duration: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = &plant.inner;
    let qs = plant::random_poses(&spec.model, poses, seed).map_err(err)?;
    let m = &model.inner;
    let s = py
        .detach(|| metrics::drift_test(spec, &m.params, &m.gcc, &qs, duration, metrics::DEFAULT_DRIFT_DT))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("translational_mean", s.translational.mean)?;
    d.set_item("translational_std", s.translational.std)?;
    d.set_item("rotational_deg_mean", s.rotational_deg.mean)?;
    d.set_item("rotational_deg_std", s.rotational_deg.std)?;
    Ok(d)
}

/// Direction ratio of the controller for one joint difference.
#[pyfunction]
#[pyo3(signature = (dq, dead_band=GccConfig::DEFAULT_DEAD_BAND, saturation=GccConfig::DEFAULT_SATURATION, alpha=GccConfig::DEFAULT_ALPHA))]
fn xi(dq: f64, dead_band: f64, saturation: f64, alpha: f64) -> PyResult<f64> {
    let c = GccConfig::uniform(1, dead_band, saturation, alpha).map_err(err)?;
    Ok(c.xi_joint(0, dq))
}

#[pymodule]
fn gravcomp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKinematicModel>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyPlant>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory_test, m)?)?;
    m.add_function(wrap_pyfunction!(drift_test, m)?)?;
    m.add_function(wrap_pyfunction!(xi, m)?)?;
    m.add("IdentifiabilityError", m.py().get_type::<IdentifiabilityError>())?;
    Ok(())
}
