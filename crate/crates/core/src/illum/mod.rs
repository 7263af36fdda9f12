//! Illumination-level classification.
//!
//! An image is log-transformed and decomposed with a thin SVD. Each
//! singular value `d_i` is squashed with `c_i = 1 / (1 + exp(-beta * d_i))`
//! and the L2 norm of `c` is the image's illumination coefficient. A
//! calibration over a reference set fixes the coefficient range
//! `[min, max]`, which is cut into three equal bands. Anything outside the
//! range is L0 (below) or L4 (above).

mod profile;
mod svd;

use crate::error::{Error, Result};
use crate::imaging::{log_transform, GrayImage};

pub use profile::{CalibrationProfile, IlluminationLevel, SEVERE_SHADOW_LEF_PERFORMANCE, STEP_TOLERANCE};
pub use svd::{reconstruct, thin_svd, thin_svd_plane, SingularSpectrum, SVD_MAX_SWEEPS};

pub const DEFAULT_BETA: f64 = 1.0;

/// Energy coefficients `c_i = sigmoid(beta * d_i)` for every singular value.
pub fn ecil(s: &SingularSpectrum, beta: f64) -> Result<Vec<f64>> {
    ecil_values(s.values(), beta)
}

pub fn ecil_values(d: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Parameter(format!("beta must be > 0, got {beta}")));
    }
    Ok(d.iter().map(|&di| 1.0 / (1.0 + (-beta * di).exp())).collect())
}

/// Euclidean norm of the ECIL sequence.
pub fn il_coefficient(c: &[f64]) -> Result<f64> {
    if c.is_empty() {
        return Err(Error::Parameter("illumination coefficient of an empty sequence".into()));
    }
    Ok(c.iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// Runs log transform, SVD, ECIL and the norm on one image.
pub fn image_coefficient(img: &GrayImage, beta: f64) -> Result<f64> {
    let spectrum = thin_svd(&log_transform(img))?;
    il_coefficient(&ecil(&spectrum, beta)?)
}

/// Builds a profile whose range spans the given reference coefficients.
pub fn calibrate(coefficients: &[f64], beta: f64) -> Result<CalibrationProfile> {
    if coefficients.is_empty() {
        return Err(Error::Parameter("calibration needs at least one coefficient".into()));
    }
    if let Some(bad) = coefficients.iter().find(|c| !c.is_finite()) {
        return Err(Error::Parameter(format!("non-finite coefficient {bad}")));
    }
    let lo = coefficients.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = coefficients.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::ZeroWidthRange(lo));
    }
    CalibrationProfile::new(lo, hi, beta)
}

/// Maps a coefficient onto its band. Bands L1 and L2 are half-open, L3 is
/// closed at the calibrated maximum.
pub fn classify_level(coefficient: f64, profile: &CalibrationProfile) -> Result<IlluminationLevel> {
    if coefficient.is_nan() {
        return Err(Error::Parameter("illumination coefficient is NaN".into()));
    }
    let (lo, hi, step) = (profile.min_coefficient(), profile.max_coefficient(), profile.step());
    Ok(if coefficient < lo {
        IlluminationLevel::L0
    } else if coefficient > hi {
        IlluminationLevel::L4
    } else if coefficient < lo + step {
        IlluminationLevel::L1
    } else if coefficient < lo + 2.0 * step {
        IlluminationLevel::L2
    } else {
        IlluminationLevel::L3
    })
}

pub fn classify_image(img: &GrayImage, profile: &CalibrationProfile) -> Result<IlluminationLevel> {
    classify_level(image_coefficient(img, profile.beta())?, profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::LevelParams;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn profile_10_16() -> CalibrationProfile {
        calibrate(&[10.0, 13.0, 16.0], 1.0).unwrap()
    }

    #[test]
    fn ecil_scalars() {
        let c = ecil_values(&[0.0, 1.0, 1000.0], 1.0).unwrap();
        assert_eq!(c[0], 0.5);
        assert_abs_diff_eq!(c[1], 0.731_058_578_630_004_9, epsilon = 1e-12);
        assert_abs_diff_eq!(c[2], 1.0, epsilon = 1e-15);
        assert!(ecil_values(&[1.0], 0.0).is_err());
    }

    #[test]
    fn coefficient_norms() {
        assert_eq!(il_coefficient(&[1.0]).unwrap(), 1.0);
        assert_eq!(il_coefficient(&[0.5; 4]).unwrap(), 1.0);
        assert_eq!(il_coefficient(&[3.0, 4.0]).unwrap(), 5.0);
        assert!(il_coefficient(&[]).is_err());
    }

    #[test]
    fn calibrate_three_points() {
        let p = profile_10_16();
        assert_eq!(p.min_coefficient(), 10.0);
        assert_eq!(p.max_coefficient(), 16.0);
        assert_eq!(p.step(), 2.0);
        assert_eq!(p.beta(), 1.0);
    }

    #[test]
    fn calibrate_rejects_zero_width() {
        assert!(matches!(calibrate(&[5.0, 5.0], 1.0), Err(Error::ZeroWidthRange(_))));
        assert!(calibrate(&[], 1.0).is_err());
    }

    #[test]
    fn level_table() {
        let p = profile_10_16();
        let cases = [
            (9.0, IlluminationLevel::L0),
            (10.0, IlluminationLevel::L1),
            (11.999, IlluminationLevel::L1),
            (12.0, IlluminationLevel::L2),
            (13.0, IlluminationLevel::L2),
            (14.0, IlluminationLevel::L3),
            (16.0, IlluminationLevel::L3),
            (17.0, IlluminationLevel::L4),
        ];
        for (c, want) in cases {
            assert_eq!(classify_level(c, &p).unwrap(), want, "coefficient {c}");
        }
        assert!(classify_level(f64::NAN, &p).is_err());
    }

    #[test]
    fn default_table_values() {
        let p = profile_10_16();
        let want = [(5, 2.0, 3.0), (5, 2.0, 3.0), (4, 1.0, 3.0), (3, 1.0, 2.0), (3, 1.0, 2.0)];
        for (level, (k, sigma2, delta)) in IlluminationLevel::ALL.into_iter().zip(want) {
            assert_eq!(p.level_params(level), Some(&LevelParams { k, sigma2, delta }));
        }
        assert_eq!(p.lef_performance(IlluminationLevel::L3).unwrap()[..3], [92.5, 93.4, 95.9]);
        assert!(p.lef_performance(IlluminationLevel::L1).is_none());
    }

    #[test]
    fn profile_text_rejects_bad_step() {
        let mut text = profile_10_16().to_text();
        text = text.replace("step = 2", "step = 2.1");
        assert!(CalibrationProfile::from_text(&text).is_err());
    }

    #[test]
    fn profile_text_rejects_short_performance() {
        let text = profile_10_16().to_text().replacen(
            "lef_performance = 92.5,93.4,95.9,95.1,93.7,92.2,91.8,91.1,90.3,89.2",
            "lef_performance = 92.5,93.4",
            1,
        );
        assert!(CalibrationProfile::from_text(&text).is_err());
    }

    #[test]
    fn profile_text_rejects_unknown_keys() {
        let text = format!("{}\ngamma = 3\n", profile_10_16().to_text());
        assert!(CalibrationProfile::from_text(&text).is_err());
        assert!(CalibrationProfile::from_text("min_coefficient = 1\n").is_err());
    }

    proptest! {
        #[test]
        fn profile_round_trips(lo in -1e3f64..1e3, width in 1e-3f64..1e3, beta in 0.01f64..10.0,
                               perf in proptest::collection::vec(0.0f64..100.0, 5..12)) {
            let mut p = calibrate(&[lo, lo + width], beta).unwrap();
            p.set_lef_performance(IlluminationLevel::L0, perf).unwrap();
            let back = CalibrationProfile::from_text(&p.to_text()).unwrap();
            prop_assert_eq!(back, p);
        }

        #[test]
        fn ecil_range_and_order(mut d in proptest::collection::vec(0.0f64..50.0, 1..40), beta in 0.05f64..5.0) {
            d.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let c = ecil_values(&d, beta).unwrap();
            for w in c.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            for (&ci, &di) in c.iter().zip(&d) {
                prop_assert!((0.5..=1.0).contains(&ci));
                if beta * di < 30.0 {
                    prop_assert!(ci < 1.0);
                }
            }
        }

        #[test]
        fn ecil_grows_with_beta(d in 1e-3f64..20.0, b1 in 0.01f64..5.0, extra in 0.0f64..5.0) {
            let lo = ecil_values(&[d], b1).unwrap()[0];
            let hi = ecil_values(&[d], b1 + extra).unwrap()[0];
            prop_assert!(hi >= lo);
        }
    }
}
