use std::fs;
use std::path::Path;

use super::FeatureMap;
use crate::error::{Error, Result};
use crate::imaging::{io::save_rescaled, Plane};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub center: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]` of the map's values. A constant
/// map puts every pixel in the first bin.
pub fn feature_histogram(m: &FeatureMap, bins: usize) -> Result<Vec<HistogramBin>> {
    if bins < 1 {
        return Err(Error::Parameter("histogram needs at least one bin".into()));
    }
    let Some((lo, hi)) = m.plane().min_max() else {
        return Ok(Vec::new());
    };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in m.values() {
        let idx = if width > 0.0 { ((v - lo) / width) as usize } else { 0 };
        counts[idx.min(bins - 1)] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin { center: lo + (i as f64 + 0.5) * width, count })
        .collect())
}

/// One CSV line per image row, values at full precision.
pub fn write_feature_csv(m: &FeatureMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for row in m.values().chunks(m.width().max(1)) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Write { path: path.to_path_buf(), source })
}

/// Reads a plane written by [`write_feature_csv`].
pub fn read_feature_csv(path: impl AsRef<Path>) -> Result<Plane> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
    let mut width = None;
    let mut values = Vec::new();
    let mut height = 0;
    for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parameter(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Dimension(format!("{}: ragged row {}", path.display(), lineno + 1)))
            }
            _ => {}
        }
        values.extend(row);
        height += 1;
    }
    Plane::new(width.unwrap_or(0), height, values)
}

/// 8-bit rendering after an affine rescale onto `[0, 255]`.
pub fn save_feature_png(m: &FeatureMap, path: impl AsRef<Path>) -> Result<()> {
    save_rescaled(m.plane(), path)
}
