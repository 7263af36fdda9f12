//! Multiscale log-domain edgemaps and their fusion.
//!
//! `LEF_k(x, y)` sums `f(x, y) - f(x', y')` over every `(x', y')` in the
//! `(2k+1) x (2k+1)` window around `(x, y)`, center excluded, so windows of
//! increasing `k` are nested. Borders are replicated. The joint map weights
//! `LEF_1..LEF_alpha` by [`ScaleWeights::omega_g`], and the constrained face
//! squashes the joint map with a sigmoid of gain `delta`.

mod baselines;
mod export;
mod params;
mod weights;

use std::fmt;

use crate::error::{Error, Result};
use crate::illum::{classify_image, CalibrationProfile, IlluminationLevel};
use crate::imaging::{log_transform, pad_replicate, GrayImage, LogImage, Plane};

pub use baselines::{gradient_face, weber_face, DEFAULT_SMOOTH_SIGMA, FLAT_GRADIENT_EPS};
pub use export::{feature_histogram, read_feature_csv, save_feature_png, write_feature_csv, HistogramBin};
pub use params::LevelParams;
pub use weights::{gaussian_weights, softmax_weights, ScaleWeights};

/// Which transform produced a [`FeatureMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Lef(usize),
    Jlef,
    Ajlef,
    Weber,
    Gradient,
    /// Untouched pixel intensities.
    Raw,
    /// Log-transformed intensities.
    Log,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKind::Lef(k) => write!(f, "lef{k}"),
            FeatureKind::Jlef => f.write_str("jlef"),
            FeatureKind::Ajlef => f.write_str("ajlef"),
            FeatureKind::Weber => f.write_str("weber"),
            FeatureKind::Gradient => f.write_str("gradient"),
            FeatureKind::Raw => f.write_str("raw"),
            FeatureKind::Log => f.write_str("log"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    plane: Plane,
    kind: FeatureKind,
}

impl FeatureMap {
    pub fn new(plane: Plane, kind: FeatureKind) -> Result<Self> {
        if plane.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("{kind} map has non-finite values")));
        }
        Ok(Self { plane, kind })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.plane.width()
    }

    pub fn height(&self) -> usize {
        self.plane.height()
    }

    pub fn values(&self) -> &[f64] {
        self.plane.values()
    }

    pub fn plane(&self) -> &Plane {
        &self.plane
    }

    pub fn from_gray(img: &GrayImage) -> Self {
        Self { plane: img.plane().clone(), kind: FeatureKind::Raw }
    }

    pub fn from_log(img: &LogImage) -> Self {
        Self { plane: img.plane().clone(), kind: FeatureKind::Log }
    }
}

/// Number of neighbors in the radius-`k` window: `(2k+1)^2 - 1`.
pub fn window_size(k: usize) -> usize {
    (2 * k + 1) * (2 * k + 1) - 1
}

/// Single-scale edgemap `LEF_k`.
pub fn lef(f: &LogImage, k: usize) -> Result<FeatureMap> {
    if k < 1 {
        return Err(Error::Parameter("edgemap scale k must be >= 1".into()));
    }
    let stack = lef_stack(f, k);
    let plane = stack.into_iter().next_back().expect("k >= 1 gives a non-empty stack");
    FeatureMap::new(plane, FeatureKind::Lef(k))
}

/// `[LEF_1, ..., LEF_alpha]`, built ring by ring so every scale reuses the
/// sums of the one below it.
pub fn lef_stack(f: &LogImage, alpha: usize) -> Vec<Plane> {
    let (w, h) = (f.width(), f.height());
    if alpha == 0 {
        return Vec::new();
    }
    let padded = pad_replicate(f.plane(), alpha);
    let pw = padded.width();
    let src = padded.values();
    let mut stack: Vec<Vec<f64>> = vec![vec![0.0; w * h]; alpha];
    for y in 0..h {
        for x in 0..w {
            let cy = y + alpha;
            let cx = x + alpha;
            let center = src[cy * pw + cx];
            let mut acc = 0.0;
            for k in 1..=alpha {
                // ring at Chebyshev distance exactly k
                let top = (cy - k) * pw;
                let bottom = (cy + k) * pw;
                for xx in cx - k..=cx + k {
                    acc += (center - src[top + xx]) + (center - src[bottom + xx]);
                }
                for yy in cy - k + 1..cy + k {
                    let row = yy * pw;
                    acc += (center - src[row + cx - k]) + (center - src[row + cx + k]);
                }
                stack[k - 1][y * w + x] = acc;
            }
        }
    }
    stack.into_iter().map(|data| Plane::new(w, h, data).expect("dimensions match source")).collect()
}

/// Joint edgemap: `sum_k omega_g(k) * LEF_k`.
pub fn jlef(f: &LogImage, weights: &ScaleWeights) -> Result<FeatureMap> {
    let stack = lef_stack(f, weights.alpha());
    let mut out = vec![0.0; f.width() * f.height()];
    for (plane, &wk) in stack.iter().zip(weights.omega_g()) {
        for (o, &v) in out.iter_mut().zip(plane.values()) {
            *o += wk * v;
        }
    }
    FeatureMap::new(Plane::new(f.width(), f.height(), out)?, FeatureKind::Jlef)
}

/// Constrained face: `1 / (1 + exp(-delta * JLEF))` per pixel.
pub fn ajlef(j: &FeatureMap, delta: f64) -> Result<FeatureMap> {
    if j.kind() != FeatureKind::Jlef {
        return Err(Error::Parameter(format!("sigmoid constraint expects a jlef map, got {}", j.kind())));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Parameter(format!("delta must be > 0, got {delta}")));
    }
    FeatureMap::new(j.plane().map(|v| 1.0 / (1.0 + (-delta * v).exp())), FeatureKind::Ajlef)
}

/// Output stage of [`extract`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Jlef,
    Ajlef,
}

/// Everything [`extract_detailed`] decided along the way.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub level: IlluminationLevel,
    pub params: LevelParams,
    pub weights: ScaleWeights,
    pub map: FeatureMap,
}

/// Weights for a level: its stored performance vector if any, else uniform.
pub fn level_weights(profile: &CalibrationProfile, level: IlluminationLevel) -> Result<ScaleWeights> {
    let params = profile.level_params(level).ok_or_else(|| Error::MissingLevel(level.to_string()))?;
    ScaleWeights::from_performance(profile.lef_performance(level), params.k, params.sigma2)
}

/// Classifies the image, then computes the joint or constrained map with
/// that level's parameters.
pub fn extract_detailed(img: &GrayImage, profile: &CalibrationProfile, stage: Stage) -> Result<Extraction> {
    let level = classify_image(img, profile)?;
    extract_at_level(img, profile, level, stage)
}

/// Like [`extract_detailed`] with the level fixed by the caller.
pub fn extract_at_level(
    img: &GrayImage,
    profile: &CalibrationProfile,
    level: IlluminationLevel,
    stage: Stage,
) -> Result<Extraction> {
    let params = *profile.level_params(level).ok_or_else(|| Error::MissingLevel(level.to_string()))?;
    let weights = level_weights(profile, level)?;
    let joint = jlef(&log_transform(img), &weights)?;
    let map = match stage {
        Stage::Jlef => joint,
        Stage::Ajlef => ajlef(&joint, params.delta)?,
    };
    Ok(Extraction { level, params, weights, map })
}

pub fn extract(img: &GrayImage, profile: &CalibrationProfile, stage: Stage) -> Result<FeatureMap> {
    extract_detailed(img, profile, stage).map(|e| e.map)
}
