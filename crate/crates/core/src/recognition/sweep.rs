use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use super::{
    arr_evaluate_images, load_manifest_images, DatasetManifest, FixedLevel, Method, MethodExtractor, SingleScale,
};
use crate::error::{Error, Result};
use crate::features::{LevelParams, Stage};
use crate::illum::{calibrate, ecil_values, il_coefficient, thin_svd, CalibrationProfile, IlluminationLevel};
use crate::imaging::{log_transform, GrayImage};

/// Parameter varied by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Single-scale edgemap `LEF_k`; grid values are scales.
    K,
    /// Joint map with the level's `k`, varying the Gaussian variance.
    Sigma2,
    /// Constrained map with the level's `k` and `sigma2`, varying the gain.
    Delta,
    /// Recalibrates the level boundaries with each beta, then runs the
    /// adaptive constrained pipeline.
    Beta,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::K => "k",
            SweepAxis::Sigma2 => "sigma2",
            SweepAxis::Delta => "delta",
            SweepAxis::Beta => "beta",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" => Ok(SweepAxis::K),
            "sigma2" => Ok(SweepAxis::Sigma2),
            "delta" => Ok(SweepAxis::Delta),
            "beta" => Ok(SweepAxis::Beta),
            other => Err(Error::Parameter(format!("unknown sweep axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub parameter: f64,
    /// Average recognition rate as a fraction.
    pub arr: f64,
}

/// Parses `a,b,c` lists or `start:stop[:step]` inclusive ranges.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parameter(format!("bad grid value '{s}'")))
    };
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let (start, stop, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1.0),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err(Error::Parameter(format!("bad grid range '{spec}'"))),
        };
        if step.is_nan() || step <= 0.0 {
            return Err(Error::Parameter("grid step must be > 0".into()));
        }
        let count = ((stop - start) / step + 1e-9).floor();
        if count < 0.0 {
            Vec::new()
        } else {
            (0..=count as usize).map(|i| start + i as f64 * step).collect()
        }
    } else {
        spec.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() {
        return Err(Error::Parameter("sweep grid is empty".into()));
    }
    Ok(grid)
}

/// Evaluates the manifest once per grid value.
pub fn sweep(
    manifest: &DatasetManifest,
    profile: &CalibrationProfile,
    axis: SweepAxis,
    grid: &[f64],
    level: IlluminationLevel,
) -> Result<Vec<SweepRow>> {
    let images = load_manifest_images(manifest)?;
    sweep_images(&images, profile, axis, grid, level)
}

pub fn sweep_images(
    images: &[(String, GrayImage)],
    profile: &CalibrationProfile,
    axis: SweepAxis,
    grid: &[f64],
    level: IlluminationLevel,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Parameter("sweep grid is empty".into()));
    }
    let base = *profile.level_params(level).ok_or_else(|| Error::MissingLevel(level.to_string()))?;
    // singular values are beta-independent, so decompose once
    let spectra: Option<Vec<Vec<f64>>> = match axis {
        SweepAxis::Beta => Some(
            images
                .par_iter()
                .map(|(_, img)| thin_svd(&log_transform(img)).map(|s| s.values().to_vec()))
                .collect::<Result<_>>()?,
        ),
        _ => None,
    };
    grid.iter()
        .map(|&value| {
            let report = match axis {
                SweepAxis::K => arr_evaluate_images(images, &SingleScale(as_scale(value)?))?,
                SweepAxis::Sigma2 => {
                    let params = LevelParams { sigma2: value, ..base };
                    arr_evaluate_images(images, &FixedLevel::new(profile, level, params, Stage::Jlef)?)?
                }
                SweepAxis::Delta => {
                    let params = LevelParams { delta: value, ..base };
                    arr_evaluate_images(images, &FixedLevel::new(profile, level, params, Stage::Ajlef)?)?
                }
                SweepAxis::Beta => {
                    let coefficients = spectra
                        .as_ref()
                        .expect("computed for the beta axis")
                        .iter()
                        .map(|d| il_coefficient(&ecil_values(d, value)?))
                        .collect::<Result<Vec<_>>>()?;
                    let range = calibrate(&coefficients, value)?;
                    let recalibrated = profile.with_range(range.min_coefficient(), range.max_coefficient(), value)?;
                    arr_evaluate_images(images, &MethodExtractor { method: Method::Ajlef, profile: &recalibrated })?
                }
            };
            Ok(SweepRow { parameter: value, arr: report.arr() })
        })
        .collect()
}

fn as_scale(value: f64) -> Result<usize> {
    if value >= 1.0 && value.fract() == 0.0 && value <= 1e6 {
        Ok(value as usize)
    } else {
        Err(Error::Parameter(format!("k grid values must be positive integers, got {value}")))
    }
}

/// `parameter,arr_percent` rows. Percentages on the `k` axis can be stored
/// directly as a level's performance vector.
pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, sweep_csv(rows)?).map_err(|source| Error::Write { path: path.to_path_buf(), source })
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["parameter", "arr_percent"])?;
    for r in rows {
        w.write_record([r.parameter.to_string(), (r.arr * 100.0).to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
