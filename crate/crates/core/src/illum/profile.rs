use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::LevelParams;

/// Illumination severity class, ordered from brighter-than-reference (`L0`)
/// to darker-than-reference (`L4`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IlluminationLevel {
    L0,
    L1,
    L2,
    L3,
    L4,
}

impl IlluminationLevel {
    pub const ALL: [IlluminationLevel; 5] = [Self::L0, Self::L1, Self::L2, Self::L3, Self::L4];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Default `(k, sigma2, delta)` for this level.
    pub fn default_params(self) -> LevelParams {
        let (k, sigma2, delta) = match self {
            Self::L0 | Self::L1 => (5, 2.0, 3.0),
            Self::L2 => (4, 1.0, 3.0),
            Self::L3 | Self::L4 => (3, 1.0, 2.0),
        };
        LevelParams { k, sigma2, delta }
    }
}

impl fmt::Display for IlluminationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.index())
    }
}

impl FromStr for IlluminationLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "L0" => Ok(Self::L0),
            "L1" => Ok(Self::L1),
            "L2" => Ok(Self::L2),
            "L3" => Ok(Self::L3),
            "L4" => Ok(Self::L4),
            other => Err(Error::Parameter(format!("unknown illumination level '{other}'"))),
        }
    }
}

/// Per-scale recognition rates (percent) of single-scale edgemaps measured on
/// the severe-shadow reference subset, k = 1..10.
pub const SEVERE_SHADOW_LEF_PERFORMANCE: [f64; 10] = [92.5, 93.4, 95.9, 95.1, 93.7, 92.2, 91.8, 91.1, 90.3, 89.2];

/// Tolerance applied when checking `step` against `(max - min) / 3`.
pub const STEP_TOLERANCE: f64 = 1e-9;

/// Level boundaries plus the per-level extraction parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProfile {
    min_coefficient: f64,
    max_coefficient: f64,
    step: f64,
    beta: f64,
    level_params: BTreeMap<IlluminationLevel, LevelParams>,
    lef_performance: BTreeMap<IlluminationLevel, Vec<f64>>,
}

impl CalibrationProfile {
    /// Builds a profile with the default level table. L3 and L4 carry the
    /// published severe-shadow performance vector; other levels fall back to
    /// uniform weights.
    pub fn new(min_coefficient: f64, max_coefficient: f64, beta: f64) -> Result<Self> {
        let level_params = IlluminationLevel::ALL.iter().map(|&l| (l, l.default_params())).collect();
        let lef_performance = [IlluminationLevel::L3, IlluminationLevel::L4]
            .into_iter()
            .map(|l| (l, SEVERE_SHADOW_LEF_PERFORMANCE.to_vec()))
            .collect();
        let profile = Self {
            min_coefficient,
            max_coefficient,
            step: (max_coefficient - min_coefficient) / 3.0,
            beta,
            level_params,
            lef_performance,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn min_coefficient(&self) -> f64 {
        self.min_coefficient
    }

    pub fn max_coefficient(&self) -> f64 {
        self.max_coefficient
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn level_params(&self, level: IlluminationLevel) -> Option<&LevelParams> {
        self.level_params.get(&level)
    }

    pub fn lef_performance(&self, level: IlluminationLevel) -> Option<&[f64]> {
        self.lef_performance.get(&level).map(Vec::as_slice)
    }

    pub fn set_level_params(&mut self, level: IlluminationLevel, params: LevelParams) -> Result<()> {
        params.validate()?;
        if let Some(perf) = self.lef_performance.get(&level) {
            check_performance_len(level, perf, params.k)?;
        }
        self.level_params.insert(level, params);
        Ok(())
    }

    /// Stores a per-k performance vector (percent) for `level`.
    pub fn set_lef_performance(&mut self, level: IlluminationLevel, perf: Vec<f64>) -> Result<()> {
        if perf.iter().any(|p| !p.is_finite()) {
            return Err(Error::Profile(format!("non-finite lef_performance for {level}")));
        }
        if let Some(params) = self.level_params.get(&level) {
            check_performance_len(level, &perf, params.k)?;
        }
        self.lef_performance.insert(level, perf);
        Ok(())
    }

    pub fn clear_lef_performance(&mut self, level: IlluminationLevel) {
        self.lef_performance.remove(&level);
    }

    /// Same level table with a new coefficient range and beta.
    pub fn with_range(&self, min_coefficient: f64, max_coefficient: f64, beta: f64) -> Result<Self> {
        let p = Self {
            min_coefficient,
            max_coefficient,
            step: (max_coefficient - min_coefficient) / 3.0,
            beta,
            ..self.clone()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        let mut p = self.clone();
        p.beta = beta;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.min_coefficient, self.max_coefficient);
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Profile("coefficient bounds must be finite".into()));
        }
        if lo >= hi {
            return Err(Error::Profile(format!("min_coefficient {lo} must be below max_coefficient {hi}")));
        }
        let expected = (hi - lo) / 3.0;
        if (self.step - expected).abs() > STEP_TOLERANCE * expected.abs().max(1.0) {
            return Err(Error::Profile(format!("step {} does not equal (max - min) / 3 = {expected}", self.step)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Profile(format!("beta must be > 0, got {}", self.beta)));
        }
        for (level, params) in &self.level_params {
            params.validate().map_err(|e| Error::Profile(format!("{level}: {e}")))?;
            if let Some(perf) = self.lef_performance.get(level) {
                check_performance_len(*level, perf, params.k)?;
            }
        }
        Ok(())
    }

    /// Renders the profile in its `key = value` text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# illumination level calibration profile");
        let _ = writeln!(out, "min_coefficient = {}", self.min_coefficient);
        let _ = writeln!(out, "max_coefficient = {}", self.max_coefficient);
        let _ = writeln!(out, "step = {}", self.step);
        let _ = writeln!(out, "beta = {}", self.beta);
        for (level, params) in &self.level_params {
            let _ = writeln!(out, "\n[level.{level}]");
            let _ = writeln!(out, "k = {}", params.k);
            let _ = writeln!(out, "sigma2 = {}", params.sigma2);
            let _ = writeln!(out, "delta = {}", params.delta);
            if let Some(perf) = self.lef_performance.get(level) {
                let joined: Vec<String> = perf.iter().map(|p| p.to_string()).collect();
                let _ = writeln!(out, "lef_performance = {}", joined.join(","));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut top: BTreeMap<&str, f64> = BTreeMap::new();
        let mut sections: BTreeMap<IlluminationLevel, BTreeMap<&str, &str>> = BTreeMap::new();
        let mut current: Option<IlluminationLevel> = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |msg: String| Error::Profile(format!("line {}: {msg}", lineno + 1));
            if let Some(header) = line.strip_prefix('[') {
                let name = header
                    .strip_suffix(']')
                    .and_then(|h| h.trim().strip_prefix("level."))
                    .ok_or_else(|| at(format!("bad section header '{line}'")))?;
                let level: IlluminationLevel = name.parse().map_err(|e: Error| at(e.to_string()))?;
                if sections.insert(level, BTreeMap::new()).is_some() {
                    return Err(at(format!("duplicate section for {level}")));
                }
                current = Some(level);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| at(format!("expected 'key = value', got '{line}'")))?;
            match current {
                None => {
                    if !matches!(key, "min_coefficient" | "max_coefficient" | "step" | "beta") {
                        return Err(at(format!("unknown key '{key}'")));
                    }
                    let v = parse_f64(value).map_err(at)?;
                    if top.insert(key, v).is_some() {
                        return Err(at(format!("duplicate key '{key}'")));
                    }
                }
                Some(level) => {
                    if !matches!(key, "k" | "sigma2" | "delta" | "lef_performance") {
                        return Err(at(format!("unknown key '{key}' in [level.{level}]")));
                    }
                    let section = sections.get_mut(&level).expect("section registered");
                    if section.insert(key, value).is_some() {
                        return Err(at(format!("duplicate key '{key}' in [level.{level}]")));
                    }
                }
            }
        }

        let get = |key: &str| top.get(key).copied().ok_or_else(|| Error::Profile(format!("missing key '{key}'")));
        let mut level_params = BTreeMap::new();
        let mut lef_performance = BTreeMap::new();
        for (level, section) in sections {
            let field = |key: &str| {
                section
                    .get(key)
                    .copied()
                    .ok_or_else(|| Error::Profile(format!("missing key '{key}' in [level.{level}]")))
            };
            let k = field("k")?
                .parse::<usize>()
                .map_err(|_| Error::Profile(format!("k in [level.{level}] must be a positive integer")))?;
            let sigma2 = parse_f64(field("sigma2")?).map_err(Error::Profile)?;
            let delta = parse_f64(field("delta")?).map_err(Error::Profile)?;
            level_params.insert(level, LevelParams { k, sigma2, delta });
            if let Some(perf) = section.get("lef_performance") {
                let values = perf
                    .split(',')
                    .map(|p| parse_f64(p.trim()))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(Error::Profile)?;
                lef_performance.insert(level, values);
            }
        }
        let profile = Self {
            min_coefficient: get("min_coefficient")?,
            max_coefficient: get("max_coefficient")?,
            step: get("step")?,
            beta: get("beta")?,
            level_params,
            lef_performance,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
        Self::from_text(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|source| Error::Write { path: path.to_path_buf(), source })
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("'{s}' is not a finite number"))
}

fn check_performance_len(level: IlluminationLevel, perf: &[f64], k: usize) -> Result<()> {
    if perf.len() < k {
        return Err(Error::Profile(format!("lef_performance for {level} has {} entries but k = {k}", perf.len())));
    }
    Ok(())
}
