use crate::error::{Error, Result};

/// Softmax over the first `alpha` performance values (percent scale, used
/// as-is). The maximum is subtracted before exponentiating.
pub fn softmax_weights(performance: &[f64], alpha: usize) -> Result<Vec<f64>> {
    if alpha < 1 {
        return Err(Error::Parameter("alpha must be >= 1".into()));
    }
    if performance.len() < alpha {
        return Err(Error::Parameter(format!(
            "alpha {alpha} exceeds the {} available performance values",
            performance.len()
        )));
    }
    let head = &performance[..alpha];
    if head.iter().any(|p| !p.is_finite()) {
        return Err(Error::Parameter("performance values must be finite".into()));
    }
    let peak = head.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = head.iter().map(|p| (p - peak).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// `exp(-w^2 / (2 sigma2))` for each softmax weight.
pub fn gaussian_weights(omega_normal: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::Parameter(format!("sigma2 must be > 0, got {sigma2}")));
    }
    Ok(omega_normal.iter().map(|w| (-(w * w) / (2.0 * sigma2)).exp()).collect())
}

/// Fusion weights for scales `1..=alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleWeights {
    alpha: usize,
    omega_normal: Vec<f64>,
    omega_g: Vec<f64>,
    sigma2: f64,
}

impl ScaleWeights {
    /// Derives weights from a per-scale performance vector. Without one,
    /// every scale gets the same performance and therefore the same weight.
    pub fn from_performance(performance: Option<&[f64]>, alpha: usize, sigma2: f64) -> Result<Self> {
        let uniform;
        let perf = match performance {
            Some(p) => p,
            None => {
                uniform = vec![0.0; alpha];
                &uniform
            }
        };
        let omega_normal = softmax_weights(perf, alpha)?;
        let omega_g = gaussian_weights(&omega_normal, sigma2)?;
        Ok(Self { alpha, omega_normal, omega_g, sigma2 })
    }

    /// Uses `omega_g` directly, bypassing the performance vector.
    pub fn from_gaussian(omega_g: Vec<f64>) -> Result<Self> {
        if omega_g.is_empty() {
            return Err(Error::Parameter("at least one scale weight is required".into()));
        }
        let alpha = omega_g.len();
        Ok(Self { alpha, omega_normal: vec![1.0 / alpha as f64; alpha], omega_g, sigma2: f64::NAN })
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn omega_normal(&self) -> &[f64] {
        &self.omega_normal
    }

    pub fn omega_g(&self) -> &[f64] {
        &self.omega_g
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `sum_k omega_g(k) * |window_k|`: the factor that multiplies
    /// `ln(1 + eps)` in the worst-case joint-edgemap perturbation.
    pub fn perturbation_gain(&self) -> f64 {
        self.omega_g.iter().enumerate().map(|(i, w)| w * super::window_size(i + 1) as f64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn equal_inputs_are_uniform() {
        let w = softmax_weights(&[50.0, 50.0, 50.0], 3).unwrap();
        for x in w {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(softmax_weights(&[7.0], 1).unwrap(), vec![1.0]);
    }

    #[test]
    fn alpha_bounds() {
        assert!(softmax_weights(&[1.0, 2.0], 3).is_err());
        assert!(softmax_weights(&[1.0], 0).is_err());
    }

    #[test]
    fn severe_shadow_head() {
        // 30-digit softmax of [92.5, 93.4, 95.9]:
        // 0.029918887062161900, 0.073588587700446819, 0.896492525237391281
        let w = softmax_weights(&[92.5, 93.4, 95.9, 95.1], 3).unwrap();
        assert_abs_diff_eq!(w[0], 0.029_918_887_062_161_9, epsilon = 1e-14);
        assert_abs_diff_eq!(w[1], 0.073_588_587_700_446_82, epsilon = 1e-14);
        assert_abs_diff_eq!(w[2], 0.896_492_525_237_391_3, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_scalars() {
        assert_eq!(gaussian_weights(&[0.0], 1.0).unwrap(), vec![1.0]);
        assert_abs_diff_eq!(gaussian_weights(&[1.0], 1.0).unwrap()[0], 0.606_530_659_712_633_4, epsilon = 1e-15);
        assert_abs_diff_eq!(gaussian_weights(&[1.0], 2.0).unwrap()[0], 0.778_800_783_071_404_9, epsilon = 1e-15);
        assert!(gaussian_weights(&[1.0], 0.0).is_err());
    }

    #[test]
    fn uniform_fallback() {
        let w = ScaleWeights::from_performance(None, 4, 2.0).unwrap();
        assert_eq!(w.alpha(), 4);
        assert!(w.omega_g().windows(2).all(|p| p[0] == p[1]));
    }

    proptest! {
        #[test]
        fn weight_invariants(perf in proptest::collection::vec(0.0f64..100.0, 1..12), sigma2 in 0.05f64..10.0, pick in 0usize..12) {
            let alpha = 1 + pick % perf.len();
            let w = ScaleWeights::from_performance(Some(&perf), alpha, sigma2).unwrap();
            prop_assert_eq!(w.omega_normal().len(), alpha);
            prop_assert_eq!(w.omega_g().len(), alpha);
            let total: f64 = w.omega_normal().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            for &x in w.omega_normal() {
                prop_assert!(x > 0.0 && x <= 1.0);
                let head = &perf[..alpha];
                let spread = head.iter().cloned().fold(f64::MIN, f64::max) - head.iter().cloned().fold(f64::MAX, f64::min);
                // f64 rounds the dominant weight to exactly 1 once the spread passes ~36
                if alpha > 1 && spread < 30.0 {
                    prop_assert!(x < 1.0);
                }
            }
            for &g in w.omega_g() {
                prop_assert!(g > 0.0 && g <= 1.0);
            }
        }
    }
}
