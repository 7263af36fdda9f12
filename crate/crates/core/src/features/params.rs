use crate::error::{Error, Result};

/// Extraction parameters attached to one illumination level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelParams {
    /// Largest neighborhood radius fused into the joint edgemap.
    pub k: usize,
    /// Variance of the Gaussian reweighting.
    pub sigma2: f64,
    /// Sigmoid gain of the constrained face.
    pub delta: f64,
}

impl LevelParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Parameter("k must be >= 1".into()));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Parameter(format!("sigma2 must be > 0, got {}", self.sigma2)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Parameter(format!("delta must be > 0, got {}", self.delta)));
        }
        Ok(())
    }
}
