//! Python bindings for `yysplat`.
//!
//! Images cross the boundary as flat row-major lists plus a shape, poses as
//! a 3x3 rotation and a centre.

use nalgebra::{Matrix3, Vector3};
use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;

use yysplat::gaussians::Gaussian3D;
use yysplat::pipeline::{run_scene as run_scene_rs, PipelineConfig};
use yysplat::scene_synth::{make_scene as make_scene_rs, Scene};
use yysplat::sphere_geom::Direction;
use yysplat::{decompose, io_formats, metrics, rasterizer, sweep, Error, FieldImage, GaussianCloud, GridSpec, Pose};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyIOError::new_err(err.to_string()),
        Error::PixelOutOfRange { .. } => PyIndexError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

#[pyclass(name = "FieldImage", module = "yysplat_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyFieldImage {
    inner: FieldImage,
}

impl From<FieldImage> for PyFieldImage {
    fn from(inner: FieldImage) -> Self {
        PyFieldImage { inner }
    }
}

#[pymethods]
impl PyFieldImage {
    #[new]
    #[pyo3(signature = (height, width, channels, data=None))]
    fn new(height: usize, width: usize, channels: usize, data: Option<Vec<f64>>) -> PyResult<Self> {
        let data = data.unwrap_or_else(|| vec![0.0; height * width * channels]);
        FieldImage::new(height, width, channels, data).map(Into::into).map_err(to_py)
    }

    #[staticmethod]
    fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        FieldImage::filled(height, width, channels, value).into()
    }

    /// `(height, width, channels)`.
    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        self.inner.shape()
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn get(&self, u: usize, v: usize, c: usize) -> PyResult<f64> {
        let (h, w, ch) = self.inner.shape();
        if u >= w || v >= h || c >= ch {
            return Err(PyIndexError::new_err(format!("({u}, {v}, {c}) outside {h}x{w}x{ch}")));
        }
        Ok(self.inner.get(u, v, c))
    }

    fn pixel(&self, u: usize, v: usize) -> PyResult<Vec<f64>> {
        self.get(u, v, 0)?;
        Ok(self.inner.pixel(u, v).to_vec())
    }

    fn __repr__(&self) -> String {
        let (h, w, c) = self.inner.shape();
        format!("FieldImage({h}x{w}x{c})")
    }
}

#[pyclass(name = "GridSpec", module = "yysplat_py", skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PyGridSpec {
    inner: GridSpec,
}

#[pymethods]
impl PyGridSpec {
    #[staticmethod]
    fn equirect(height: usize) -> PyResult<Self> {
        GridSpec::equirect(height).map(|inner| PyGridSpec { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn yin(height: usize) -> PyResult<Self> {
        GridSpec::yin(height).map(|inner| PyGridSpec { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn yang(height: usize) -> PyResult<Self> {
        GridSpec::yang(height).map(|inner| PyGridSpec { inner }).map_err(to_py)
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width
    }

    #[getter]
    fn family(&self) -> String {
        format!("{:?}", self.inner.family).to_lowercase()
    }

    /// Unit direction through the centre of pixel `(u, v)`.
    fn pixel_to_direction(&self, u: usize, v: usize) -> PyResult<(f64, f64, f64)> {
        let d = self.inner.pixel_to_direction(u, v).map_err(to_py)?;
        Ok((d.x(), d.y(), d.z()))
    }

    /// Continuous `(u, v, inside)` for a direction (need not be normalized).
    fn direction_to_pixel(&self, x: f64, y: f64, z: f64) -> PyResult<(f64, f64, bool)> {
        let d = Direction::from_xyz(x, y, z).ok_or_else(|| PyValueError::new_err("zero direction"))?;
        let p = self.inner.direction_to_pixel(&d);
        Ok((p.u, p.v, p.inside))
    }

    fn __repr__(&self) -> String {
        format!("GridSpec({}, {}x{})", self.family(), self.inner.height, self.inner.width)
    }
}

#[pyclass(name = "Pose", module = "yysplat_py", skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PyPose {
    inner: Pose,
}

#[pymethods]
impl PyPose {
    /// `rotation` maps world to camera axes, `center` is the camera centre.
    #[new]
    #[pyo3(signature = (rotation=None, center=[0.0; 3]))]
    fn new(rotation: Option<[[f64; 3]; 3]>, center: [f64; 3]) -> PyResult<Self> {
        let r = match rotation {
            Some(r) => Matrix3::from_fn(|i, j| r[i][j]),
            None => Matrix3::identity(),
        };
        Pose::new(r, Vector3::from(center)).map(|inner| PyPose { inner }).map_err(to_py)
    }

    #[getter]
    fn rotation(&self) -> [[f64; 3]; 3] {
        let r = self.inner.rotation();
        [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]])
    }

    #[getter]
    fn center(&self) -> [f64; 3] {
        self.inner.center().into()
    }

    fn world_to_camera(&self, p: [f64; 3]) -> [f64; 3] {
        self.inner.world_to_camera(&Vector3::from(p)).into()
    }

    fn __repr__(&self) -> String {
        let c = self.inner.center();
        format!("Pose(center=({}, {}, {}))", c.x, c.y, c.z)
    }
}

#[pyclass(name = "GaussianCloud", module = "yysplat_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyGaussianCloud {
    inner: GaussianCloud,
}

#[pymethods]
impl PyGaussianCloud {
    #[new]
    #[pyo3(signature = (sh_degree=0))]
    fn new(sh_degree: u32) -> PyResult<Self> {
        GaussianCloud::new(sh_degree).map(|inner| PyGaussianCloud { inner }).map_err(to_py)
    }

    /// Appends an isotropic Gaussian.
    fn add_isotropic(&mut self, position: [f64; 3], sigma: f64, opacity: f64, rgb: [f64; 3]) -> PyResult<()> {
        let g = Gaussian3D::isotropic(Vector3::from(position), sigma, opacity, rgb);
        self.inner.push(g).map_err(to_py)
    }

    #[getter]
    fn sh_degree(&self) -> u32 {
        self.inner.sh_degree()
    }

    fn positions(&self) -> Vec<[f64; 3]> {
        self.inner.gaussians().iter().map(|g| g.position.into()).collect()
    }

    fn opacities(&self) -> Vec<f64> {
        self.inner.gaussians().iter().map(|g| g.opacity).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("GaussianCloud(len={}, sh_degree={})", self.inner.len(), self.inner.sh_degree())
    }
}

#[pyclass(name = "Scene", module = "yysplat_py")]
pub struct PyScene {
    inner: Scene,
}

#[pymethods]
impl PyScene {
    #[getter]
    fn name(&self) -> &'static str {
        self.inner.kind.name()
    }

    #[getter]
    fn cloud(&self) -> PyGaussianCloud {
        PyGaussianCloud { inner: self.inner.cloud.clone() }
    }

    #[getter]
    fn reference_poses(&self) -> Vec<PyPose> {
        self.inner.reference_poses.iter().map(|&inner| PyPose { inner }).collect()
    }

    #[getter]
    fn target_poses(&self) -> Vec<PyPose> {
        self.inner.target_poses.iter().map(|&inner| PyPose { inner }).collect()
    }

    /// Ray-cast `(image, depth, ids)` seen from `pose`.
    #[pyo3(signature = (pose, grid, supersample=1))]
    fn render_truth(
        &self,
        pose: &PyPose,
        grid: &PyGridSpec,
        supersample: usize,
    ) -> (PyFieldImage, PyFieldImage, PyFieldImage) {
        let gt = self.inner.render_truth_supersampled(&pose.inner, &grid.inner, supersample.max(1));
        (gt.image.into(), gt.depth.into(), gt.ids.into())
    }
}

/// Builds a synthetic scene: "shell", "textured-room", "polar-field" or "two-objects".
#[pyfunction]
#[pyo3(signature = (name, seed=0))]
fn make_scene(name: &str, seed: u64) -> PyResult<PyScene> {
    make_scene_rs(name, seed).map(|inner| PyScene { inner }).map_err(to_py)
}

/// Splits an equirect image into `(yin, yang)` of height `height`.
#[pyfunction]
fn decompose_yinyang(img: &PyFieldImage, height: usize) -> PyResult<(PyFieldImage, PyFieldImage)> {
    let (yin, yang) = decompose::decompose_yinyang(&img.inner, height).map_err(to_py)?;
    Ok((yin.into(), yang.into()))
}

/// Blends Yin and Yang back onto an equirect grid of height `height`.
#[pyfunction]
fn recompose_yinyang(yin: &PyFieldImage, yang: &PyFieldImage, height: usize) -> PyResult<PyFieldImage> {
    let grid = GridSpec::equirect(height).map_err(to_py)?;
    decompose::recompose_yinyang(&yin.inner, &yang.inner, grid).map(Into::into).map_err(to_py)
}

/// Single-pass render; returns `(image, alpha)`.
#[pyfunction]
fn rasterize(cloud: &PyGaussianCloud, grid: &PyGridSpec, pose: &PyPose) -> PyResult<(PyFieldImage, PyFieldImage)> {
    let out = rasterizer::rasterize(&cloud.inner, &grid.inner, &pose.inner).map_err(to_py)?;
    Ok((out.image.into(), out.alpha.into()))
}

/// Two-pass Yin/Yang render onto an equirect grid; returns `(image, alpha)`.
#[pyfunction]
fn render_yinyang(cloud: &PyGaussianCloud, pose: &PyPose, height: usize) -> PyResult<(PyFieldImage, PyFieldImage)> {
    let grid = GridSpec::equirect(height).map_err(to_py)?;
    let out = rasterizer::render_yinyang(&cloud.inner, &pose.inner, &grid).map_err(to_py)?;
    Ok((out.image.into(), out.alpha.into()))
}

#[pyfunction]
fn psnr(a: &PyFieldImage, b: &PyFieldImage) -> PyResult<f64> {
    metrics::psnr(&a.inner, &b.inner).map_err(to_py)
}

#[pyfunction]
fn ssim(a: &PyFieldImage, b: &PyFieldImage) -> PyResult<f64> {
    metrics::ssim(&a.inner, &b.inner).map_err(to_py)
}

/// Depth candidates uniform in inverse depth, nearest first.
#[pyfunction]
fn depth_candidates(d_near: f64, d_far: f64, count: usize) -> PyResult<Vec<f64>> {
    sweep::depth_candidates(d_near, d_far, count)
        .map(|c| c.values().to_vec())
        .map_err(to_py)
}

/// Runs the full pipeline on a synthetic scene; returns `(psnr, ssim)` per target.
#[pyfunction]
#[pyo3(signature = (name, seed=0, height=64))]
fn run_scene(py: Python<'_>, name: &str, seed: u64, height: usize) -> PyResult<Vec<(f64, f64)>> {
    let kind = name.parse().map_err(to_py)?;
    let out = py
        .detach(|| run_scene_rs(kind, seed, height, &PipelineConfig::default()))
        .map_err(to_py)?;
    Ok(out.evaluations.iter().map(|e| (e.psnr, e.ssim)).collect())
}

/// Reads a `.pfm` or `.png` image.
#[pyfunction]
fn read_image(path: &str) -> PyResult<PyFieldImage> {
    io_formats::read_image(path).map(Into::into).map_err(to_py)
}

#[pyfunction]
fn write_image(img: &PyFieldImage, path: &str) -> PyResult<()> {
    io_formats::write_image(&img.inner, path).map_err(to_py)
}

#[pyfunction]
fn read_cloud(path: &str) -> PyResult<PyGaussianCloud> {
    io_formats::read_cloud(path).map(|inner| PyGaussianCloud { inner }).map_err(to_py)
}

#[pyfunction]
fn write_cloud(cloud: &PyGaussianCloud, path: &str) -> PyResult<()> {
    io_formats::write_cloud(&cloud.inner, path).map_err(to_py)
}

#[pymodule]
fn yysplat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFieldImage>()?;
    m.add_class::<PyGridSpec>()?;
    m.add_class::<PyPose>()?;
    m.add_class::<PyGaussianCloud>()?;
    m.add_class::<PyScene>()?;
    m.add_function(wrap_pyfunction!(make_scene, m)?)?;
    m.add_function(wrap_pyfunction!(decompose_yinyang, m)?)?;
    m.add_function(wrap_pyfunction!(recompose_yinyang, m)?)?;
    m.add_function(wrap_pyfunction!(rasterize, m)?)?;
    m.add_function(wrap_pyfunction!(render_yinyang, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(depth_candidates, m)?)?;
    m.add_function(wrap_pyfunction!(run_scene, m)?)?;
    m.add_function(wrap_pyfunction!(read_image, m)?)?;
    m.add_function(wrap_pyfunction!(write_image, m)?)?;
    m.add_function(wrap_pyfunction!(read_cloud, m)?)?;
    m.add_function(wrap_pyfunction!(write_cloud, m)?)?;
    Ok(())
}
