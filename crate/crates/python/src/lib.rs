//! Python bindings. Images and feature maps travel as flat row-major lists
//! of floats plus their dimensions.

use std::path::PathBuf;

use ajlef::features::{self, Stage};
use ajlef::illum::{self, IlluminationLevel};
use ajlef::imaging::{self, log_transform};
use ajlef::recognition::{self, Method, MethodExtractor};
use ajlef::synth::SyntheticSet;
use ajlef::Error;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Read { .. } | Error::Write { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for ajlef::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn parse_level(level: &str) -> PyResult<IlluminationLevel> {
    level.parse().py()
}

fn parse_stage(stage: &str) -> PyResult<Stage> {
    match stage {
        "ajlef" => Ok(Stage::Ajlef),
        "jlef" => Ok(Stage::Jlef),
        other => Err(PyValueError::new_err(format!("stage must be 'ajlef' or 'jlef', got '{other}'"))),
    }
}

/// Grayscale image with non-negative pixels.
#[pyclass(name = "Image", module = "ajlef", frozen, from_py_object)]
#[derive(Clone)]
struct PyImage(imaging::GrayImage);

#[pymethods]
impl PyImage {
    #[new]
    fn new(width: usize, height: usize, pixels: Vec<f64>) -> PyResult<Self> {
        imaging::GrayImage::new(width, height, pixels).py().map(Self)
    }

    /// Reads an 8-bit PGM (P5) or grayscale PNG.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        imaging::io::load_image(path).py().map(Self)
    }

    /// Writes PNG when the extension is `.png`, PGM otherwise.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        imaging::io::save_image(&self.0, path).py()
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn pixels(&self) -> Vec<f64> {
        self.0.pixels().to_vec()
    }

    fn scaled(&self, factor: f64) -> PyResult<Self> {
        self.0.scaled(factor).py().map(Self)
    }

    /// `ln(max(p, 1))` per pixel.
    fn log(&self) -> Vec<f64> {
        log_transform(&self.0).values().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.0.width(), self.0.height())
    }
}

#[pyclass(name = "FeatureMap", module = "ajlef", frozen, from_py_object)]
#[derive(Clone)]
struct PyFeatureMap(features::FeatureMap);

#[pymethods]
impl PyFeatureMap {
    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn kind(&self) -> String {
        self.0.kind().to_string()
    }

    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn save_csv(&self, path: PathBuf) -> PyResult<()> {
        features::write_feature_csv(&self.0, path).py()
    }

    fn __repr__(&self) -> String {
        format!("FeatureMap({}, {}x{})", self.0.kind(), self.0.width(), self.0.height())
    }
}

/// Calibrated coefficient range plus per-level parameters.
#[pyclass(name = "CalibrationProfile", module = "ajlef", from_py_object)]
#[derive(Clone)]
struct PyProfile(illum::CalibrationProfile);

#[pymethods]
impl PyProfile {
    #[new]
    #[pyo3(signature = (min_coefficient, max_coefficient, beta = illum::DEFAULT_BETA))]
    fn new(min_coefficient: f64, max_coefficient: f64, beta: f64) -> PyResult<Self> {
        illum::CalibrationProfile::new(min_coefficient, max_coefficient, beta).py().map(Self)
    }

    /// Profile spanning the given reference coefficients.
    #[staticmethod]
    #[pyo3(signature = (coefficients, beta = illum::DEFAULT_BETA))]
    fn calibrate(coefficients: Vec<f64>, beta: f64) -> PyResult<Self> {
        illum::calibrate(&coefficients, beta).py().map(Self)
    }

    /// Computes the coefficient of every image, then calibrates.
    #[staticmethod]
    #[pyo3(signature = (images, beta = illum::DEFAULT_BETA))]
    fn from_images(images: Vec<PyImage>, beta: f64) -> PyResult<Self> {
        let coeffs = images.iter().map(|im| illum::image_coefficient(&im.0, beta)).collect::<ajlef::Result<Vec<_>>>();
        illum::calibrate(&coeffs.py()?, beta).py().map(Self)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        illum::CalibrationProfile::load(path).py().map(Self)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(path).py()
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn min_coefficient(&self) -> f64 {
        self.0.min_coefficient()
    }

    #[getter]
    fn max_coefficient(&self) -> f64 {
        self.0.max_coefficient()
    }

    #[getter]
    fn step(&self) -> f64 {
        self.0.step()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    /// `(k, sigma2, delta)` for a level name such as `"L3"`.
    fn level_params(&self, level: &str) -> PyResult<(usize, f64, f64)> {
        let lvl = parse_level(level)?;
        let p = self.0.level_params(lvl).ok_or_else(|| PyValueError::new_err(format!("no parameters for {lvl}")))?;
        Ok((p.k, p.sigma2, p.delta))
    }

    fn lef_performance(&self, level: &str) -> PyResult<Option<Vec<f64>>> {
        Ok(self.0.lef_performance(parse_level(level)?).map(<[f64]>::to_vec))
    }

    fn set_lef_performance(&mut self, level: &str, performance: Vec<f64>) -> PyResult<()> {
        self.0.set_lef_performance(parse_level(level)?, performance).py()
    }

    /// Level name for a coefficient.
    fn classify(&self, coefficient: f64) -> PyResult<String> {
        illum::classify_level(coefficient, &self.0).py().map(|l| l.to_string())
    }

    fn classify_image(&self, image: &PyImage) -> PyResult<String> {
        illum::classify_image(&image.0, &self.0).py().map(|l| l.to_string())
    }

    fn __repr__(&self) -> String {
        format!(
            "CalibrationProfile(min={}, max={}, beta={})",
            self.0.min_coefficient(),
            self.0.max_coefficient(),
            self.0.beta()
        )
    }
}

/// Singular values of the log image, non-increasing.
#[pyfunction]
fn singular_values(image: &PyImage) -> PyResult<Vec<f64>> {
    illum::thin_svd(&log_transform(&image.0)).py().map(|s| s.values().to_vec())
}

#[pyfunction]
#[pyo3(signature = (values, beta = illum::DEFAULT_BETA))]
fn ecil(values: Vec<f64>, beta: f64) -> PyResult<Vec<f64>> {
    illum::ecil_values(&values, beta).py()
}

#[pyfunction]
fn il_coefficient(c: Vec<f64>) -> PyResult<f64> {
    illum::il_coefficient(&c).py()
}

#[pyfunction]
#[pyo3(signature = (image, beta = illum::DEFAULT_BETA))]
fn image_coefficient(image: &PyImage, beta: f64) -> PyResult<f64> {
    illum::image_coefficient(&image.0, beta).py()
}

#[pyfunction]
fn softmax_weights(performance: Vec<f64>, alpha: usize) -> PyResult<Vec<f64>> {
    features::softmax_weights(&performance, alpha).py()
}

#[pyfunction]
fn gaussian_weights(omega_normal: Vec<f64>, sigma2: f64) -> PyResult<Vec<f64>> {
    features::gaussian_weights(&omega_normal, sigma2).py()
}

/// Single-scale log edgemap.
#[pyfunction]
fn lef(image: &PyImage, k: usize) -> PyResult<PyFeatureMap> {
    features::lef(&log_transform(&image.0), k).py().map(PyFeatureMap)
}

/// Classifies the image (unless `level` is given) and returns
/// `(level, feature_map)`.
#[pyfunction]
#[pyo3(signature = (image, profile, stage = "ajlef", level = None))]
fn extract(image: &PyImage, profile: &PyProfile, stage: &str, level: Option<&str>) -> PyResult<(String, PyFeatureMap)> {
    let stage = parse_stage(stage)?;
    let e = match level {
        Some(l) => features::extract_at_level(&image.0, &profile.0, parse_level(l)?, stage),
        None => features::extract_detailed(&image.0, &profile.0, stage),
    }
    .py()?;
    Ok((e.level.to_string(), PyFeatureMap(e.map)))
}

#[pyfunction]
#[pyo3(signature = (image, sigma = features::DEFAULT_SMOOTH_SIGMA))]
fn weber_face(image: &PyImage, sigma: f64) -> PyResult<PyFeatureMap> {
    features::weber_face(&image.0, sigma).py().map(PyFeatureMap)
}

#[pyfunction]
#[pyo3(signature = (image, sigma = features::DEFAULT_SMOOTH_SIGMA))]
fn gradient_face(image: &PyImage, sigma: f64) -> PyResult<PyFeatureMap> {
    features::gradient_face(&image.0, sigma).py().map(PyFeatureMap)
}

/// Label of the nearest gallery map; ties go to the earliest entry.
#[pyfunction]
fn nn_classify(probe: &PyFeatureMap, gallery: Vec<(String, PyFeatureMap)>) -> PyResult<String> {
    let gallery: Vec<(String, features::FeatureMap)> = gallery.into_iter().map(|(l, m)| (l, m.0)).collect();
    recognition::nn_classify(&probe.0, &gallery).py().map(str::to_owned)
}

/// Rotating-gallery evaluation over `(person_id, image)` pairs. Returns
/// `(arr, per_round_rates)`.
#[pyfunction]
fn arr_evaluate(
    py: Python<'_>,
    images: Vec<(String, PyImage)>,
    method: &str,
    profile: &PyProfile,
) -> PyResult<(f64, Vec<f64>)> {
    let method: Method = method.parse().py()?;
    let images: Vec<(String, imaging::GrayImage)> = images.into_iter().map(|(id, im)| (id, im.0)).collect();
    let profile = profile.0.clone();
    let report =
        py.detach(|| recognition::arr_evaluate_images(&images, &MethodExtractor { method, profile: &profile })).py()?;
    Ok((report.arr(), report.rounds().to_vec()))
}

/// Labeled Lambertian scenes, `(person_id, image)` in generation order.
#[pyfunction]
#[pyo3(signature = (identities = 20, variants = 8, width = 64, height = 64, seed = ajlef::synth::PINNED_SEED))]
fn synthetic_set(
    identities: usize,
    variants: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> PyResult<Vec<(String, PyImage)>> {
    let set = SyntheticSet { identities, variants, width, height, seed };
    Ok(set.labeled_images().py()?.into_iter().map(|(id, im)| (id, PyImage(im))).collect())
}

#[pymodule]
#[pyo3(name = "ajlef")]
pub fn ajlef_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyFeatureMap>()?;
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(singular_values, m)?)?;
    m.add_function(wrap_pyfunction!(ecil, m)?)?;
    m.add_function(wrap_pyfunction!(il_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(image_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(softmax_weights, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_weights, m)?)?;
    m.add_function(wrap_pyfunction!(lef, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(weber_face, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_face, m)?)?;
    m.add_function(wrap_pyfunction!(nn_classify, m)?)?;
    m.add_function(wrap_pyfunction!(arr_evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_set, m)?)?;
    Ok(())
}
