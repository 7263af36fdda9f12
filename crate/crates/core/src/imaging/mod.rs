//! Image containers, the log transform, replicate padding and Gaussian
//! smoothing.
//!
//! Pixels are kept as `f64` internally. Quantization to 8 bits only happens
//! when an image is written to disk (see [`io`]).

pub mod io;

use crate::error::{Error, Result};

pub use io::{load_image, save_image};

/// A dense row-major matrix of real values.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        let expected =
            width.checked_mul(height).ok_or(Error::DimensionOverflow { width: width as u64, height: height as u64 })?;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "{}x{} plane needs {} values, got {}",
                width,
                height,
                expected,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Value at `(x, y)` with coordinates clamped into the plane.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn same_shape(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.data.iter().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }
}

/// A grayscale image with finite, non-negative intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage(Plane);

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        Self::from_plane(Plane::new(width, height, pixels)?)
    }

    pub fn from_plane(plane: Plane) -> Result<Self> {
        if let Some((index, &value)) = plane.values().iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::Parameter(format!(
                "pixel {index} has invalid intensity {value} (must be finite and >= 0)"
            )));
        }
        Ok(Self(plane))
    }

    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, bytes.iter().map(|&b| f64::from(b)).collect())
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn pixels(&self) -> &[f64] {
        self.0.values()
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }

    /// Multiplies every pixel by `factor` without quantizing.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_plane(self.0.map(|v| v * factor))
    }
}

/// Natural logarithm of a [`GrayImage`], clamped so every value is `>= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogImage(Plane);

impl LogImage {
    pub fn from_plane(plane: Plane) -> Result<Self> {
        if plane.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("log image values must be finite".into()));
        }
        Ok(Self(plane))
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }

    pub fn into_plane(self) -> Plane {
        self.0
    }
}

/// `ln(max(p, 1))` for every pixel.
pub fn log_transform(img: &GrayImage) -> LogImage {
    LogImage(img.plane().map(|p| p.max(1.0).ln()))
}

/// Pads a plane by `margin` pixels on every side, replicating edge values.
pub fn pad_replicate(plane: &Plane, margin: usize) -> Plane {
    let m = margin as isize;
    Plane::from_fn(plane.width + 2 * margin, plane.height + 2 * margin, |x, y| {
        plane.get_clamped(x as isize - m, y as isize - m)
    })
}

/// [`pad_replicate`] on a [`LogImage`].
pub fn pad_log_image(img: &LogImage, margin: usize) -> LogImage {
    LogImage(pad_replicate(img.plane(), margin))
}

/// Normalized 1-D Gaussian kernel with radius `ceil(3 * sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!("gaussian sigma must be > 0, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= total);
    Ok(kernel)
}

/// Separable Gaussian blur with replicate borders.
pub fn gaussian_smooth(plane: &Plane, sigma: f64) -> Result<Plane> {
    let kernel = gaussian_kernel(sigma)?;
    let radius = (kernel.len() / 2) as isize;
    let horizontal = Plane::from_fn(plane.width, plane.height, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, w)| w * plane.get_clamped(x as isize + i as isize - radius, y as isize))
            .sum()
    });
    Ok(Plane::from_fn(plane.width, plane.height, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, w)| w * horizontal.get_clamped(x as isize, y as isize + i as isize - radius))
            .sum()
    }))
}

/// [`gaussian_smooth`] on a [`LogImage`].
pub fn gaussian_smooth_log(img: &LogImage, sigma: f64) -> Result<LogImage> {
    Ok(LogImage(gaussian_smooth(img.plane(), sigma)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gray(w: usize, h: usize, px: &[f64]) -> GrayImage {
        GrayImage::new(w, h, px.to_vec()).unwrap()
    }

    #[test]
    fn log_transform_clamps_below_one() {
        let img = gray(3, 1, &[1.0, 0.0, std::f64::consts::E.powi(2)]);
        let log = log_transform(&img);
        assert_eq!(log.values()[0], 0.0);
        assert_eq!(log.values()[1], 0.0);
        assert_abs_diff_eq!(log.values()[2], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn gray_image_rejects_negative_and_nan() {
        assert!(GrayImage::new(2, 1, vec![1.0, -0.5]).is_err());
        assert!(GrayImage::new(2, 1, vec![f64::NAN, 1.0]).is_err());
        assert!(GrayImage::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn pad_zero_margin_is_identity() {
        let p = Plane::from_fn(4, 3, |x, y| (x * 10 + y) as f64);
        assert_eq!(pad_replicate(&p, 0), p);
    }

    #[test]
    fn pad_single_pixel() {
        let p = Plane::filled(1, 1, 7.5);
        let padded = pad_replicate(&p, 2);
        assert_eq!(padded.width(), 5);
        assert_eq!(padded.height(), 5);
        assert!(padded.values().iter().all(|&v| v == 7.5));
    }

    #[test]
    fn pad_corners_and_interior() {
        let p = Plane::from_fn(3, 2, |x, y| (x + 3 * y) as f64);
        let padded = pad_replicate(&p, 2);
        assert_eq!(padded.get(0, 0), p.get(0, 0));
        assert_eq!(padded.get(6, 0), p.get(2, 0));
        assert_eq!(padded.get(0, 5), p.get(0, 1));
        assert_eq!(padded.get(6, 5), p.get(2, 1));
        for y in 0..2 {
            for x in 0..3 {
                assert_eq!(padded.get(x + 2, y + 2), p.get(x, y));
            }
        }
    }

    #[test]
    fn smoothing_keeps_constants() {
        let p = Plane::filled(9, 7, 3.25);
        let s = gaussian_smooth(&p, 1.3).unwrap();
        for v in s.values() {
            assert_abs_diff_eq!(*v, 3.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn impulse_response_sums_to_one() {
        let mut p = Plane::filled(21, 21, 0.0);
        p.set(10, 10, 1.0);
        let s = gaussian_smooth(&p, 1.0).unwrap();
        assert_abs_diff_eq!(s.values().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn impulse_center_matches_direct_2d_sum() {
        // Direct evaluation of the truncated, normalized 2-D Gaussian.
        let sigma = 1.0_f64;
        let r = 3i32;
        let g = |x: i32, y: i32| (-((x * x + y * y) as f64) / (2.0 * sigma * sigma)).exp();
        let mut total = 0.0;
        for y in -r..=r {
            for x in -r..=r {
                total += g(x, y);
            }
        }
        let expected = g(0, 0) / total;

        let mut p = Plane::filled(21, 21, 0.0);
        p.set(10, 10, 1.0);
        let s = gaussian_smooth(&p, sigma).unwrap();
        assert_abs_diff_eq!(s.get(10, 10), expected, epsilon = 1e-14);
        // 0.15924112569070242, frozen from the sum above
        assert_abs_diff_eq!(expected, 0.159_241_125_690_702_42, epsilon = 1e-12);
    }

    #[test]
    fn smoothing_rejects_bad_sigma() {
        let p = Plane::filled(3, 3, 1.0);
        assert!(gaussian_smooth(&p, 0.0).is_err());
        assert!(gaussian_smooth(&p, -1.0).is_err());
    }
}
