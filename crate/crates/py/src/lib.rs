//! Python bindings: rasters, masks, filters, thresholding, the segmentation
//! pipeline, metrics and the `.smap` / `.psg` file formats.
//!
//! Pixel data crosses the boundary as flat row-major lists; heavy work
//! runs with the interpreter detached.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};
use weakseg_core as ws;
use weakseg_core::backend::{load_psg, save_psg, FileBackend};
use weakseg_core::threshold::OtsuMode;
use weakseg_core::{BinaryMask, Error, StructuringElement};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Image { .. } => PyOSError::new_err(e.to_string()),
        Error::Backend(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for ws::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(err)
    }
}

/// Grayscale image or score map with values in [0, 1].
#[pyclass(name = "Raster", module = "weakseg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRaster {
    inner: ws::Raster,
}

#[pymethods]
impl PyRaster {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f32>) -> PyResult<Self> {
        Ok(Self {
            inner: ws::Raster::new(width, height, data).py_err()?,
        })
    }

    #[staticmethod]
    fn filled(width: usize, height: usize, value: f32) -> PyResult<Self> {
        Ok(ws::Raster::filled(width, height, value).py_err()?.into())
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<f32> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err(format!("({x}, {y}) is outside the raster")));
        }
        Ok(self.inner.get(x, y))
    }

    fn tolist(&self) -> Vec<f32> {
        self.inner.data().to_vec()
    }

    fn min_max(&self) -> (f32, f32) {
        self.inner.min_max()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> PyResult<Self> {
        Ok(self.inner.crop(x, y, width, height).py_err()?.into())
    }

    /// Reflect-101 padding.
    fn pad(&self, left: usize, right: usize, top: usize, bottom: usize) -> PyResult<Self> {
        Ok(ws::mirror_pad(&self.inner, left, right, top, bottom).py_err()?.into())
    }

    fn resize(&self, py: Python<'_>, width: usize, height: usize) -> PyResult<Self> {
        let r = &self.inner;
        Ok(py.detach(|| ws::lanczos_resize(r, width, height)).py_err()?.into())
    }

    fn to_smap<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &ws::encode_scoremap(&self.inner))
    }

    #[staticmethod]
    fn from_smap(data: &[u8]) -> PyResult<Self> {
        Ok(ws::decode_scoremap(data).py_err()?.into())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __len__(&self) -> usize {
        self.inner.data().len()
    }

    fn __repr__(&self) -> String {
        format!("Raster({}x{})", self.inner.width(), self.inner.height())
    }
}

impl From<ws::Raster> for PyRaster {
    fn from(inner: ws::Raster) -> Self {
        Self { inner }
    }
}

/// Binary crack mask, one byte per pixel in {0, 1}.
#[pyclass(name = "BinaryMask", module = "weakseg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBinaryMask {
    inner: BinaryMask,
}

#[pymethods]
impl PyBinaryMask {
    #[new]
    fn new(width: usize, height: usize, data: Vec<u8>) -> PyResult<Self> {
        Ok(BinaryMask::new(width, height, data).py_err()?.into())
    }

    #[staticmethod]
    fn zeros(width: usize, height: usize) -> PyResult<Self> {
        Ok(BinaryMask::zeros(width, height).py_err()?.into())
    }

    /// Pixels at or above `threshold` become 1.
    #[staticmethod]
    fn from_raster(raster: &PyRaster, threshold: f32) -> Self {
        BinaryMask::from_raster_threshold(&raster.inner, threshold).into()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn tolist(&self) -> Vec<u8> {
        self.inner.data().to_vec()
    }

    fn count_ones(&self) -> usize {
        self.inner.count_ones()
    }

    fn to_raster(&self) -> PyRaster {
        self.inner.to_raster().into()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "BinaryMask({}x{}, {} set)",
            self.inner.width(),
            self.inner.height(),
            self.inner.count_ones()
        )
    }
}

impl From<BinaryMask> for PyBinaryMask {
    fn from(inner: BinaryMask) -> Self {
        Self { inner }
    }
}

/// Pipeline parameters; keyword arguments override the defaults.
#[pyclass(name = "PipelineConfig", module = "weakseg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPipelineConfig {
    inner: ws::PipelineConfig,
}

#[pymethods]
impl PyPipelineConfig {
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(py: Python<'_>, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let text = match overrides {
            Some(d) => py.import("json")?.call_method1("dumps", (d,))?.extract::<String>()?,
            None => "{}".to_string(),
        };
        Self::from_json(&text)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ws::PipelineConfig::from_json(text).py_err()?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ws::PipelineConfig::load(path).py_err()?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        py.import("json")?.call_method1("loads", (self.inner.to_json(),))
    }

    fn __repr__(&self) -> String {
        format!("PipelineConfig({})", self.inner.to_json().replace('\n', ""))
    }
}

fn config_or_default(cfg: Option<&PyPipelineConfig>) -> ws::PipelineConfig {
    cfg.map(|c| c.inner.clone()).unwrap_or_default()
}

/// Classifier scores, one per localisation patch origin.
#[pyclass(name = "PatchScoreGrid", module = "weakseg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPatchScoreGrid {
    inner: ws::PatchScoreGrid,
}

#[pymethods]
impl PyPatchScoreGrid {
    #[new]
    #[pyo3(signature = (width, height, scores, patch_size = 32, stride = 16))]
    fn new(width: usize, height: usize, scores: Vec<f32>, patch_size: usize, stride: usize) -> PyResult<Self> {
        Ok(Self {
            inner: ws::PatchScoreGrid::new(width, height, patch_size, stride, scores).py_err()?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: load_psg(path).py_err()?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_psg(&self.inner, path).py_err()
    }

    /// `(columns, rows)` of the origin grid.
    #[getter]
    fn grid_shape(&self) -> (usize, usize) {
        (self.inner.grid_w, self.inner.grid_h)
    }

    #[getter]
    fn source_shape(&self) -> (usize, usize) {
        (self.inner.src_w, self.inner.src_h)
    }

    fn tolist(&self) -> Vec<f32> {
        self.inner.scores.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "PatchScoreGrid({}x{} origins for {}x{})",
            self.inner.grid_w, self.inner.grid_h, self.inner.src_w, self.inner.src_h
        )
    }
}

fn histogram(counts: Vec<u64>) -> PyResult<ws::Histogram256> {
    let counts: [u64; 256] = counts
        .try_into()
        .map_err(|c: Vec<u64>| PyValueError::new_err(format!("expected 256 bins, got {}", c.len())))?;
    Ok(ws::Histogram256::from_counts(counts))
}

/// Two-class Otsu threshold of a 256-bin histogram.
#[pyfunction]
fn otsu2(counts: Vec<u64>) -> PyResult<u8> {
    ws::otsu2(&histogram(counts)?).py_err()
}

/// Three-class Otsu thresholds `(k1, k2)` of a 256-bin histogram.
#[pyfunction]
fn otsu3(counts: Vec<u64>) -> PyResult<(u8, u8)> {
    let r = ws::otsu3(&histogram(counts)?).py_err()?;
    Ok((r.k1, r.k2))
}

/// 256-bin histogram of a raster's quantized intensities.
#[pyfunction]
fn raster_histogram(raster: &PyRaster) -> Vec<u64> {
    ws::Histogram256::from_values(raster.inner.data()).counts().to_vec()
}

/// `sigma_r` is on the 0..255 scale.
#[pyfunction]
#[pyo3(signature = (raster, sigma_s = 120.0, sigma_r = 120.0, d = 2))]
fn bilateral_filter(py: Python<'_>, raster: &PyRaster, sigma_s: f64, sigma_r: f64, d: usize) -> PyResult<PyRaster> {
    let p = ws::BilateralParams::from_8bit_range(sigma_s, sigma_r, d).py_err()?;
    let r = &raster.inner;
    Ok(py.detach(|| ws::bilateral_filter(r, &p)).into())
}

fn element(width: usize, height: Option<usize>, iterations: usize) -> PyResult<StructuringElement> {
    StructuringElement::new(width, height.unwrap_or(width), iterations).py_err()
}

#[pyfunction]
#[pyo3(signature = (raster, width = 3, height = None, iterations = 1))]
fn erode(raster: &PyRaster, width: usize, height: Option<usize>, iterations: usize) -> PyResult<PyRaster> {
    Ok(ws::erode(&raster.inner, &element(width, height, iterations)?).into())
}

#[pyfunction]
#[pyo3(signature = (raster, width = 3, height = None, iterations = 1))]
fn dilate(raster: &PyRaster, width: usize, height: Option<usize>, iterations: usize) -> PyResult<PyRaster> {
    Ok(ws::dilate(&raster.inner, &element(width, height, iterations)?).into())
}

#[pyfunction]
#[pyo3(signature = (raster, width = 3, height = None, iterations = 1))]
fn close(raster: &PyRaster, width: usize, height: Option<usize>, iterations: usize) -> PyResult<PyRaster> {
    Ok(ws::close(&raster.inner, &element(width, height, iterations)?).into())
}

/// Patch-local Otsu with unanimous fusion; `mode` is "two" or "three".
#[pyfunction]
#[pyo3(signature = (raster, patch_size = 32, stride = 8, mode = "three"))]
fn patch_threshold_segment(
    py: Python<'_>,
    raster: &PyRaster,
    patch_size: usize,
    stride: usize,
    mode: &str,
) -> PyResult<PyBinaryMask> {
    let mode: OtsuMode = mode.parse().py_err()?;
    let r = &raster.inner;
    Ok(py
        .detach(|| ws::patch_threshold_segment(r, patch_size, stride, mode))
        .py_err()?
        .into())
}

type Stages = (PyRaster, PyBinaryMask, PyRaster);

fn stages(s: ws::SegmentationStages) -> Stages {
    (s.localisation.into(), s.threshold.into(), s.output.into())
}

/// Full pipeline; returns `(localisation, threshold_mask, confidence)`.
#[pyfunction]
#[pyo3(signature = (image, scores, cam, config = None))]
fn segment(
    py: Python<'_>,
    image: &PyRaster,
    scores: &PyPatchScoreGrid,
    cam: &PyRaster,
    config: Option<&PyPipelineConfig>,
) -> PyResult<Stages> {
    let cfg = config_or_default(config);
    let backend = FileBackend::new(scores.inner.clone()).py_err()?;
    let (img, cam) = (&image.inner, &cam.inner);
    let cam = if cam.dims() == img.dims() {
        cam.clone()
    } else {
        ws::lanczos_resize(cam, img.width(), img.height()).py_err()?
    };
    py.detach(|| ws::pipeline::segment_stages(img, &backend, &cam, &cfg))
        .py_err()
        .map(stages)
}

/// Pipeline with localisation taken from the ground truth.
#[pyfunction]
#[pyo3(signature = (image, gt, config = None))]
fn gold_standard_segment(
    py: Python<'_>,
    image: &PyRaster,
    gt: &PyBinaryMask,
    config: Option<&PyPipelineConfig>,
) -> PyResult<Stages> {
    let cfg = config_or_default(config);
    let (img, gt) = (&image.inner, &gt.inner);
    py.detach(|| ws::gold_standard_segment(img, gt, &cfg))
        .py_err()
        .map(stages)
}

/// Macro-averaged F1 over 101 thresholds: `(f1, best_t, [(t, p, r), ...])`.
#[pyfunction]
fn macro_f1(
    py: Python<'_>,
    preds: Vec<PyRef<'_, PyRaster>>,
    gts: Vec<PyRef<'_, PyBinaryMask>>,
) -> PyResult<(f64, f64, Vec<(f64, f64, f64)>)> {
    let preds: Vec<ws::Raster> = preds.iter().map(|p| p.inner.clone()).collect();
    let gts: Vec<BinaryMask> = gts.iter().map(|g| g.inner.clone()).collect();
    let (f1, t, curve) = py.detach(|| ws::macro_f1(&preds, &gts)).py_err()?;
    Ok((f1, t, curve.points.iter().map(|c| (c.t, c.p, c.r)).collect()))
}

/// F1 of patch predictions, positive when `score >= 0.5`.
#[pyfunction]
fn classification_f1(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    ws::classification_f1(&scores, &labels).py_err()
}

#[pyfunction]
fn load_image(path: &str) -> PyResult<PyRaster> {
    Ok(ws::io::load_image(path).py_err()?.into())
}

/// Nonzero pixels are crack.
#[pyfunction]
fn load_mask(path: &str) -> PyResult<PyBinaryMask> {
    Ok(ws::io::load_mask(path).py_err()?.into())
}

#[pyfunction]
fn save_png(raster: &PyRaster, path: &str) -> PyResult<()> {
    ws::io::save_png(&raster.inner, path).py_err()
}

#[pyfunction]
fn load_scoremap(path: &str) -> PyResult<PyRaster> {
    Ok(ws::load_scoremap(path).py_err()?.into())
}

#[pyfunction]
fn save_scoremap(raster: &PyRaster, path: &str) -> PyResult<()> {
    ws::save_scoremap(&raster.inner, path).py_err()
}

/// Loads an activation map and resamples it to `width` x `height`.
#[pyfunction]
fn load_cam(path: &str, width: usize, height: usize) -> PyResult<PyRaster> {
    Ok(ws::load_cam(path, width, height).py_err()?.into())
}

#[pymodule]
fn weakseg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyRaster>()?;
    m.add_class::<PyBinaryMask>()?;
    m.add_class::<PyPipelineConfig>()?;
    m.add_class::<PyPatchScoreGrid>()?;
    m.add_function(wrap_pyfunction!(otsu2, m)?)?;
    m.add_function(wrap_pyfunction!(otsu3, m)?)?;
    m.add_function(wrap_pyfunction!(raster_histogram, m)?)?;
    m.add_function(wrap_pyfunction!(bilateral_filter, m)?)?;
    m.add_function(wrap_pyfunction!(erode, m)?)?;
    m.add_function(wrap_pyfunction!(dilate, m)?)?;
    m.add_function(wrap_pyfunction!(close, m)?)?;
    m.add_function(wrap_pyfunction!(patch_threshold_segment, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(gold_standard_segment, m)?)?;
    m.add_function(wrap_pyfunction!(macro_f1, m)?)?;
    m.add_function(wrap_pyfunction!(classification_f1, m)?)?;
    m.add_function(wrap_pyfunction!(load_image, m)?)?;
    m.add_function(wrap_pyfunction!(load_mask, m)?)?;
    m.add_function(wrap_pyfunction!(save_png, m)?)?;
    m.add_function(wrap_pyfunction!(load_scoremap, m)?)?;
    m.add_function(wrap_pyfunction!(save_scoremap, m)?)?;
    m.add_function(wrap_pyfunction!(load_cam, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_kinds_map_to_python_exceptions() {
        Python::initialize();
        Python::attach(|py| {
            let io = err(Error::Io {
                path: "x".into(),
                source: std::io::Error::other("gone"),
            });
            assert!(io.is_instance_of::<PyOSError>(py));
            assert!(err(Error::Backend("b".into())).is_instance_of::<PyRuntimeError>(py));
            assert!(err(Error::Shape("s".into())).is_instance_of::<PyValueError>(py));
        });
    }
}
