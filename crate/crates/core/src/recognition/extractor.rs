use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::{
    ajlef, extract, gradient_face, jlef, lef, weber_face, FeatureMap, LevelParams, ScaleWeights, Stage,
    DEFAULT_SMOOTH_SIGMA,
};
use crate::illum::{CalibrationProfile, IlluminationLevel};
use crate::imaging::{log_transform, GrayImage};

/// A named image-to-feature transform used by the evaluation protocol.
pub trait Extractor: Sync {
    fn name(&self) -> String;
    fn extract(&self, img: &GrayImage) -> Result<FeatureMap>;
}

/// Feature pipelines selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ajlef,
    Jlef,
    Weber,
    Gradient,
    Raw,
    Log,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Ajlef, Method::Jlef, Method::Weber, Method::Gradient, Method::Raw, Method::Log];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ajlef => "ajlef",
            Method::Jlef => "jlef",
            Method::Weber => "weber",
            Method::Gradient => "gradient",
            Method::Raw => "raw",
            Method::Log => "log",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Parameter(format!("unknown method '{s}'")))
    }
}

/// A [`Method`] bound to a calibration profile.
pub struct MethodExtractor<'a> {
    pub method: Method,
    pub profile: &'a CalibrationProfile,
}

impl Extractor for MethodExtractor<'_> {
    fn name(&self) -> String {
        self.method.to_string()
    }

    fn extract(&self, img: &GrayImage) -> Result<FeatureMap> {
        match self.method {
            Method::Ajlef => extract(img, self.profile, Stage::Ajlef),
            Method::Jlef => extract(img, self.profile, Stage::Jlef),
            Method::Weber => weber_face(img, DEFAULT_SMOOTH_SIGMA),
            Method::Gradient => gradient_face(img, DEFAULT_SMOOTH_SIGMA),
            Method::Raw => Ok(FeatureMap::from_gray(img)),
            Method::Log => Ok(FeatureMap::from_log(&log_transform(img))),
        }
    }
}

/// `LEF_k` at a single fixed scale.
pub struct SingleScale(pub usize);

impl Extractor for SingleScale {
    fn name(&self) -> String {
        format!("lef{}", self.0)
    }

    fn extract(&self, img: &GrayImage) -> Result<FeatureMap> {
        lef(&log_transform(img), self.0)
    }
}

/// Joint or constrained map with explicit parameters, skipping
/// classification. Used by parameter sweeps over one illumination subset.
pub struct FixedLevel {
    pub params: LevelParams,
    pub weights: ScaleWeights,
    pub stage: Stage,
}

impl FixedLevel {
    pub fn new(
        profile: &CalibrationProfile,
        level: IlluminationLevel,
        params: LevelParams,
        stage: Stage,
    ) -> Result<Self> {
        params.validate()?;
        let weights = ScaleWeights::from_performance(profile.lef_performance(level), params.k, params.sigma2)?;
        Ok(Self { params, weights, stage })
    }
}

impl Extractor for FixedLevel {
    fn name(&self) -> String {
        match self.stage {
            Stage::Jlef => format!("jlef(k={},sigma2={})", self.params.k, self.params.sigma2),
            Stage::Ajlef => {
                format!("ajlef(k={},sigma2={},delta={})", self.params.k, self.params.sigma2, self.params.delta)
            }
        }
    }

    fn extract(&self, img: &GrayImage) -> Result<FeatureMap> {
        let joint = jlef(&log_transform(img), &self.weights)?;
        match self.stage {
            Stage::Jlef => Ok(joint),
            Stage::Ajlef => ajlef(&joint, self.params.delta),
        }
    }
}
