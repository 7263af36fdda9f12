//! Weber-face and Gradient-face, the two ratio-based baselines.

use super::{FeatureKind, FeatureMap};
use crate::error::Result;
use crate::imaging::{gaussian_smooth, GrayImage, Plane};

/// Pre-smoothing applied to both baselines.
pub const DEFAULT_SMOOTH_SIGMA: f64 = 1.0;

/// Gradients below this magnitude on both axes count as flat.
pub const FLAT_GRADIENT_EPS: f64 = 1e-12;

/// `atan(sum_{8-neighbors} (I(p) - I(q)) / I(p))` on the smoothed image.
pub fn weber_face(img: &GrayImage, smooth_sigma: f64) -> Result<FeatureMap> {
    let smooth = gaussian_smooth(img.plane(), smooth_sigma)?.map(|v| v.max(1.0));
    let out = Plane::from_fn(smooth.width(), smooth.height(), |x, y| {
        let center = smooth.get(x, y);
        let (xi, yi) = (x as isize, y as isize);
        let mut acc = 0.0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                if dx != 0 || dy != 0 {
                    acc += (center - smooth.get_clamped(xi + dx, yi + dy)) / center;
                }
            }
        }
        acc.atan()
    });
    FeatureMap::new(out, FeatureKind::Weber)
}

/// `atan(dI/dy / dI/dx)` from central differences on the smoothed image.
///
/// Flat pixels map to 0. A vanishing x-gradient with a nonzero y-gradient
/// gives `+-pi/2`.
pub fn gradient_face(img: &GrayImage, smooth_sigma: f64) -> Result<FeatureMap> {
    let smooth = gaussian_smooth(img.plane(), smooth_sigma)?;
    let out = Plane::from_fn(smooth.width(), smooth.height(), |x, y| {
        let (xi, yi) = (x as isize, y as isize);
        let gx = 0.5 * (smooth.get_clamped(xi + 1, yi) - smooth.get_clamped(xi - 1, yi));
        let gy = 0.5 * (smooth.get_clamped(xi, yi + 1) - smooth.get_clamped(xi, yi - 1));
        if gx.abs() <= FLAT_GRADIENT_EPS && gy.abs() <= FLAT_GRADIENT_EPS {
            0.0
        } else {
            (gy / gx).atan()
        }
    });
    FeatureMap::new(out, FeatureKind::Gradient)
}
