//! Python bindings: scenes, camera models, rendering and ground-truth metrics.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyInt, PyList, PyString};

use omnisynth::camera::{list_models, CameraModel, CATALOG};
use omnisynth::config::{parse_config, JobConfig};
use omnisynth::environment::RenderMode;
use omnisynth::geometry::{Pose, Rotation, Vec3};
use omnisynth::groundtruth::{
    layout_metrics as metrics, read_trajectory, trajectory_errors as traj_errors, Mask,
};
use omnisynth::image::{Image, ImageGrid};

fn err(e: omnisynth::Error) -> PyErr {
    match e {
        omnisynth::Error::Io { .. } | omnisynth::Error::Image { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Scene", module = "pyomnisynth", frozen)]
struct PyScene(omnisynth::environment::Scene);

#[pymethods]
impl PyScene {
    /// Furnished 2×2×2 m room with a sphere, a box and a column.
    #[staticmethod]
    fn reference() -> Self {
        PyScene(omnisynth::environment::Scene::reference())
    }

    /// Empty 2×2×2 m room.
    #[staticmethod]
    fn unit_room() -> Self {
        PyScene(omnisynth::environment::Scene::unit_room())
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        omnisynth::environment::Scene::load(&path)
            .map(PyScene)
            .map_err(err)
    }

    fn labels(&self) -> Vec<u32> {
        self.0.labels().iter().map(|l| l.0).collect()
    }
}

#[pyclass(name = "Pose", module = "pyomnisynth", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPose(Pose);

#[pymethods]
impl PyPose {
    /// Camera-to-world pose; angles in degrees.
    #[new]
    #[pyo3(signature = (position = (0.0, 0.0, 0.0), yaw = 0.0, pitch = 0.0, roll = 0.0))]
    fn new(position: (f64, f64, f64), yaw: f64, pitch: f64, roll: f64) -> Self {
        let r =
            Rotation::from_yaw_pitch_roll(yaw.to_radians(), pitch.to_radians(), roll.to_radians());
        PyPose(Pose::new(Vec3::new(position.0, position.1, position.2), r))
    }

    #[getter]
    fn position(&self) -> (f64, f64, f64) {
        let p = self.0.position;
        (p.x, p.y, p.z)
    }

    /// Row-major rotation matrix.
    #[getter]
    fn rotation(&self) -> [[f64; 3]; 3] {
        let m = self.0.orientation.matrix();
        [0, 1, 2].map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)]])
    }
}

#[pyclass(name = "Image", module = "pyomnisynth", frozen)]
struct PyImage(Image);

#[pymethods]
impl PyImage {
    #[getter]
    fn width(&self) -> usize {
        self.0.grid.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.grid.height
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.0.mode().name()
    }

    /// Row-major semantic ids, `None` outside the field of view.
    fn labels(&self) -> Option<Vec<Option<u32>>> {
        self.0
            .labels()
            .map(|l| l.iter().map(|x| x.map(|l| l.0)).collect())
    }

    /// Row-major depths in meters, NaN outside the field of view.
    fn depths(&self) -> Option<Vec<f64>> {
        self.0.depths().map(<[f64]>::to_vec)
    }

    /// Row-major RGBA bytes for lit and semantic images.
    fn rgba(&self) -> Option<Vec<u8>> {
        self.0.to_rgba().map(|px| px.concat())
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).map_err(err)
    }
}

fn toml_value(obj: &Bound<'_, PyAny>) -> PyResult<toml::Value> {
    if obj.is_instance_of::<PyBool>() {
        Ok(toml::Value::Boolean(obj.extract()?))
    } else if obj.is_instance_of::<PyInt>() {
        Ok(toml::Value::Integer(obj.extract()?))
    } else if obj.is_instance_of::<PyFloat>() {
        Ok(toml::Value::Float(obj.extract()?))
    } else if obj.is_instance_of::<PyString>() {
        Ok(toml::Value::String(obj.extract()?))
    } else if let Ok(list) = obj.cast::<PyList>() {
        list.iter()
            .map(|x| toml_value(&x))
            .collect::<PyResult<_>>()
            .map(toml::Value::Array)
    } else {
        Err(PyValueError::new_err(format!(
            "unsupported parameter value {obj}"
        )))
    }
}

#[pyclass(name = "Camera", module = "pyomnisynth", frozen)]
struct PyCamera {
    model: CameraModel,
    grid: ImageGrid,
}

#[pymethods]
impl PyCamera {
    /// Camera of the given model id, with any config parameters as keywords
    /// (`lens`, `mirror`, `fov_h`, ...). Missing parameters take their defaults.
    #[new]
    #[pyo3(signature = (model, width, height, **params))]
    fn new(
        model: &str,
        width: usize,
        height: usize,
        params: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let mut camera = toml::Table::new();
        camera.insert("model".into(), model.into());
        camera.insert("width".into(), toml::Value::Integer(width as i64));
        camera.insert("height".into(), toml::Value::Integer(height as i64));
        if let Some(params) = params {
            for (k, v) in params.iter() {
                camera.insert(k.extract()?, toml_value(&v)?);
            }
        }
        let mut doc = toml::Table::new();
        doc.insert("camera".into(), toml::Value::Table(camera));
        let cfg = parse_config(&doc.to_string()).map_err(err)?;
        let (model, grid) = cfg.camera.build().map_err(err)?;
        Ok(PyCamera { model, grid })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.model.kind().slug()
    }

    #[getter]
    fn is_central(&self) -> bool {
        self.model.is_central()
    }

    #[getter]
    fn size(&self) -> (usize, usize) {
        (self.grid.width, self.grid.height)
    }

    /// Render `mode` (`lit`, `semantic` or `depth`) of the scene. Releases the GIL.
    #[pyo3(signature = (scene, pose, mode = "semantic"))]
    fn render(
        &self,
        py: Python<'_>,
        scene: &PyScene,
        pose: &PyPose,
        mode: &str,
    ) -> PyResult<PyImage> {
        let mode: RenderMode = mode.parse().map_err(PyValueError::new_err)?;
        let pose = pose.0;
        py.detach(|| self.model.render(&pose, self.grid, mode, &scene.0))
            .map(PyImage)
            .map_err(err)
    }

    /// Camera-frame ray of pixel coordinates `(u, v)` as `(origin, direction)`,
    /// or `None` outside the field of view.
    #[allow(clippy::type_complexity)]
    fn ray(&self, u: f64, v: f64) -> PyResult<Option<((f64, f64, f64), (f64, f64, f64))>> {
        let t = |v: Vec3| (v.x, v.y, v.z);
        match &self.model {
            CameraModel::Central(m) => Ok(m
                .back_project(u, v, self.grid)
                .map_err(err)?
                .map(|d| (t(Vec3::zeros()), t(d)))),
            CameraModel::NonCentral(m) => Ok(m
                .ray(u, v, self.grid)
                .map(|r| (t(r.closest_point_to_origin()), t(r.xi)))),
        }
    }
}

/// Model ids in catalog order.
#[pyfunction]
fn models() -> Vec<&'static str> {
    CATALOG.iter().map(|e| e.kind.slug()).collect()
}

/// The printable model catalog.
#[pyfunction]
fn catalog() -> String {
    list_models()
}

/// Run a TOML job config; returns the written files relative to the output directory.
#[pyfunction]
fn render_job(py: Python<'_>, config: PathBuf) -> PyResult<(PathBuf, Vec<PathBuf>)> {
    let cfg = JobConfig::load(&config).map_err(err)?;
    let report = py.detach(|| omnisynth::job::run_job(&cfg)).map_err(err)?;
    Ok((report.out_dir, report.files))
}

/// `IoU, Acc, P, R, F1` of two binary PNG maps.
#[pyfunction]
fn layout_metrics(pred: PathBuf, gt: PathBuf) -> PyResult<(f64, f64, f64, f64, f64)> {
    let m = metrics(
        &Mask::load(&pred).map_err(err)?,
        &Mask::load(&gt).map_err(err)?,
    )
    .map_err(err)?;
    Ok((m.iou, m.accuracy, m.precision, m.recall, m.f1))
}

/// Per-frame `(id, translation_deg, rotation_deg)`; translation is `None`
/// when undefined.
#[pyfunction]
fn trajectory_errors(gt: PathBuf, est: PathBuf) -> PyResult<Vec<(u64, Option<f64>, f64)>> {
    let gt = read_trajectory(&gt).map_err(err)?;
    let est = read_trajectory(&est).map_err(err)?;
    let report = traj_errors(&gt, &est).map_err(err)?;
    Ok(report
        .frames
        .iter()
        .map(|f| (f.id, f.translation_deg, f.rotation_deg))
        .collect())
}

#[pymodule]
fn pyomnisynth(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScene>()?;
    m.add_class::<PyPose>()?;
    m.add_class::<PyImage>()?;
    m.add_class::<PyCamera>()?;
    m.add_function(wrap_pyfunction!(models, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(render_job, m)?)?;
    m.add_function(wrap_pyfunction!(layout_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory_errors, m)?)?;
    Ok(())
}
