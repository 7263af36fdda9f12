use ajlef::features::{extract_at_level, extract_detailed, read_feature_csv, write_feature_csv, FeatureKind, Stage};
use ajlef::illum::{calibrate, classify_image, image_coefficient, CalibrationProfile, IlluminationLevel, DEFAULT_BETA};
use ajlef::imaging::{load_image, save_image, GrayImage};
use ajlef::synth::{quantize, Illumination, Scene, SceneSpec, SyntheticSet};
use tempfile::tempdir;

fn spec(illumination: Illumination) -> SceneSpec {
    SceneSpec { identity_seed: 11, illumination, strength: 0.9, width: 48, height: 40 }
}

#[test]
fn cast_shadow_changes_the_coefficient() {
    let even = Scene::render(spec(Illumination::Constant)).unwrap();
    let shadow = Illumination::HalfPlaneShadow { angle: 0.3, offset: 0.0, attenuation: 0.15, falloff: 2.0 };
    let shaded = Scene::render(spec(shadow)).unwrap();
    let a = image_coefficient(&even.image, DEFAULT_BETA).unwrap();
    let b = image_coefficient(&shaded.image, DEFAULT_BETA).unwrap();
    assert!(a.is_finite() && b.is_finite());
    assert_ne!(a, b);
}

#[test]
fn classification_is_repeat_stable() {
    let img = Scene::render(spec(Illumination::LinearRamp)).unwrap().image;
    let brighter = img.scaled(1.5).unwrap();
    let coeffs = [image_coefficient(&img, 1.0).unwrap(), image_coefficient(&brighter, 1.0).unwrap()];
    let profile = calibrate(&coeffs, 1.0).unwrap();
    let first = classify_image(&img, &profile).unwrap();
    for _ in 0..3 {
        assert_eq!(classify_image(&img, &profile).unwrap(), first);
    }
}

#[test]
fn extraction_uses_the_level_parameters() {
    let img = Scene::render(spec(Illumination::Constant)).unwrap().image;
    let profile = CalibrationProfile::new(0.0, 1e6, DEFAULT_BETA).unwrap();
    let e = extract_at_level(&img, &profile, IlluminationLevel::L3, Stage::Ajlef).unwrap();
    assert_eq!((e.params.k, e.params.sigma2, e.params.delta), (3, 1.0, 2.0));
    assert_eq!(e.weights.alpha(), 3);
    assert_eq!(e.map.kind(), FeatureKind::Ajlef);
    assert!(e.map.values().iter().all(|&v| (0.0..=1.0).contains(&v)));

    let j = extract_detailed(&img, &profile, Stage::Jlef).unwrap();
    assert_eq!(j.map.kind(), FeatureKind::Jlef);
    assert_eq!(j.level, classify_image(&img, &profile).unwrap());
}

#[test]
fn flat_image_gives_neutral_ajlef() {
    let img = GrayImage::new(9, 7, vec![80.0; 63]).unwrap();
    let profile = CalibrationProfile::new(0.0, 100.0, DEFAULT_BETA).unwrap();
    for level in IlluminationLevel::ALL {
        let e = extract_at_level(&img, &profile, level, Stage::Ajlef).unwrap();
        assert!(e.map.values().iter().all(|&v| v == 0.5));
    }
}

#[test]
fn images_and_features_survive_files() {
    let dir = tempdir().unwrap();
    let set = SyntheticSet { identities: 2, variants: 2, width: 20, height: 16, seed: 5 };
    let profile = CalibrationProfile::new(0.0, 1e6, DEFAULT_BETA).unwrap();
    for (i, (_, img)) in set.labeled_images().unwrap().into_iter().enumerate() {
        let q = quantize(&img);
        let path = dir.path().join(format!("{i}.{}", if i % 2 == 0 { "pgm" } else { "png" }));
        save_image(&q, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back, q);

        let map = extract_at_level(&back, &profile, IlluminationLevel::L2, Stage::Jlef).unwrap().map;
        let csv = dir.path().join(format!("{i}.csv"));
        write_feature_csv(&map, &csv).unwrap();
        let plane = read_feature_csv(&csv).unwrap();
        assert_eq!(plane.values(), map.values());
    }
}
