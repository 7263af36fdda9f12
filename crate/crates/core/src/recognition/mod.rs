//! Nearest-neighbor recognition and the average-recognition-rate protocol.
//!
//! Each evaluation round uses one image per person as that person's only
//! gallery sample (the first image in round 1, the second in round 2, ...).
//! Every other image is a probe. The ARR is the mean round accuracy.

mod extractor;
mod manifest;
mod report;
mod sweep;

use std::path::PathBuf;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::imaging::{load_image, GrayImage};

pub use extractor::{Extractor, FixedLevel, Method, MethodExtractor, SingleScale};
pub use manifest::{load_manifest, write_manifest, DatasetManifest, ManifestEntry};
pub use report::{export_report, read_report, EvaluationReport};
pub use sweep::{parse_grid, sweep, sweep_images, write_sweep_csv, SweepAxis, SweepRow};

/// Squared Euclidean distance between two maps' flattened values.
pub fn squared_distance(a: &FeatureMap, b: &FeatureMap) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Dimension(format!(
            "feature maps {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Index of the closest gallery map; the lowest index wins ties.
pub fn nearest_index<S>(probe: &FeatureMap, gallery: &[(S, FeatureMap)]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (_, g)) in gallery.iter().enumerate() {
        let d = squared_distance(probe, g)?;
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i).ok_or_else(|| Error::Evaluation("empty gallery".into()))
}

/// Identity of the gallery map nearest to `probe`.
pub fn nn_classify<'g, S: AsRef<str>>(probe: &FeatureMap, gallery: &'g [(S, FeatureMap)]) -> Result<&'g str> {
    nearest_index(probe, gallery).map(|i| gallery[i].0.as_ref())
}

/// Runs the round protocol over pre-extracted features grouped by person.
pub fn arr_from_features(method: &str, persons: &[(String, Vec<FeatureMap>)]) -> Result<EvaluationReport> {
    if persons.len() < 2 {
        return Err(Error::Evaluation(format!("need at least 2 persons to evaluate, got {}", persons.len())));
    }
    if let Some((id, imgs)) = persons.iter().find(|(_, imgs)| imgs.len() < 2) {
        return Err(Error::Evaluation(format!("person '{id}' has {} image(s); at least 2 are required", imgs.len())));
    }
    let rounds_n = persons.iter().map(|(_, imgs)| imgs.len()).min().expect("non-empty");
    let mut rounds = Vec::with_capacity(rounds_n);
    for round in 0..rounds_n {
        let gallery: Vec<(usize, FeatureMap)> =
            persons.iter().enumerate().map(|(p, (_, imgs))| (p, imgs[round].clone())).collect();
        let probes: Vec<(usize, &FeatureMap)> = persons
            .iter()
            .enumerate()
            .flat_map(|(p, (_, imgs))| {
                imgs.iter().enumerate().filter(move |(j, _)| *j != round).map(move |(_, m)| (p, m))
            })
            .collect();
        let outcomes: Vec<bool> = probes
            .par_iter()
            .map(|(truth, probe)| nearest_index(probe, &gallery).map(|i| gallery[i].0 == *truth))
            .collect::<Result<_>>()?;
        let correct = outcomes.iter().filter(|&&ok| ok).count();
        rounds.push(correct as f64 / outcomes.len() as f64);
    }
    let per_person_counts = persons.iter().map(|(id, imgs)| (id.clone(), imgs.len())).collect();
    Ok(EvaluationReport::new(method.to_string(), rounds, per_person_counts))
}

/// Extracts features for labeled in-memory images, then runs the protocol.
pub fn arr_evaluate_images(images: &[(String, GrayImage)], extractor: &dyn Extractor) -> Result<EvaluationReport> {
    let features: Vec<FeatureMap> = images
        .par_iter()
        .enumerate()
        .map(|(i, (_, img))| {
            extractor
                .extract(img)
                .map_err(|e| Error::Extraction { path: PathBuf::from(format!("<image {i}>")), source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let grouped = manifest::group_in_order(images.iter().map(|(id, _)| id.clone()).zip(features));
    arr_from_features(&extractor.name(), &grouped)
}

/// Loads every manifest image, extracts features and runs the protocol.
pub fn arr_evaluate(manifest: &DatasetManifest, extractor: &dyn Extractor) -> Result<EvaluationReport> {
    let features = extract_manifest(manifest, extractor)?;
    let grouped = manifest::group_in_order(manifest.entries().iter().map(|e| e.person_id.clone()).zip(features));
    arr_from_features(&extractor.name(), &grouped)
}

/// Loads all manifest images in entry order.
pub fn load_manifest_images(manifest: &DatasetManifest) -> Result<Vec<(String, GrayImage)>> {
    manifest.entries().par_iter().map(|e| load_image(&e.path).map(|img| (e.person_id.clone(), img))).collect()
}

fn extract_manifest(manifest: &DatasetManifest, extractor: &dyn Extractor) -> Result<Vec<FeatureMap>> {
    manifest
        .entries()
        .par_iter()
        .map(|e| {
            load_image(&e.path)
                .and_then(|img| extractor.extract(&img))
                .map_err(|source| Error::Extraction { path: e.path.clone(), source: Box::new(source) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;
    use crate::imaging::Plane;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fmap(values: Vec<f64>) -> FeatureMap {
        let n = values.len();
        FeatureMap::new(Plane::new(n, 1, values).unwrap(), FeatureKind::Raw).unwrap()
    }

    #[test]
    fn identical_probe_matches() {
        let gallery = vec![("a", fmap(vec![0.0, 1.0])), ("b", fmap(vec![5.0, 5.0])), ("c", fmap(vec![-1.0, 2.0]))];
        assert_eq!(nn_classify(&fmap(vec![5.0, 5.0]), &gallery).unwrap(), "b");
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let gallery = vec![("x", fmap(vec![1.0, 0.0])), ("y", fmap(vec![-1.0, 0.0]))];
        assert_eq!(nn_classify(&fmap(vec![0.0, 0.0]), &gallery).unwrap(), "x");
        let swapped = vec![("y", fmap(vec![-1.0, 0.0])), ("x", fmap(vec![1.0, 0.0]))];
        assert_eq!(nn_classify(&fmap(vec![0.0, 0.0]), &swapped).unwrap(), "y");
    }

    #[test]
    fn classifier_errors() {
        let empty: Vec<(&str, FeatureMap)> = Vec::new();
        assert!(nn_classify(&fmap(vec![0.0]), &empty).is_err());
        let gallery = vec![("a", fmap(vec![0.0, 1.0]))];
        assert!(matches!(nn_classify(&fmap(vec![0.0]), &gallery), Err(Error::Dimension(_))));
    }

    #[test]
    fn random_probes_match_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let gallery: Vec<(String, FeatureMap)> =
            (0..5).map(|i| (format!("g{i}"), fmap((0..16).map(|_| rng.random_range(-1.0..1.0)).collect()))).collect();
        for _ in 0..20 {
            let probe = fmap((0..16).map(|_| rng.random_range(-1.0..1.0)).collect());
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, (_, g)) in gallery.iter().enumerate() {
                let d: f64 = g.values().iter().zip(probe.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            assert_eq!(nn_classify(&probe, &gallery).unwrap(), gallery[best].0);
        }
    }

    #[test]
    fn perfect_separation_gives_unit_arr() {
        let persons: Vec<(String, Vec<FeatureMap>)> =
            (0..4).map(|p| (format!("p{p}"), vec![fmap(vec![p as f64, 1.0]); 3])).collect();
        let r = arr_from_features("raw", &persons).unwrap();
        assert_eq!(r.rounds(), &[1.0, 1.0, 1.0]);
        assert_eq!(r.arr(), 1.0);
    }

    #[test]
    fn unequal_counts_use_min_rounds_and_keep_extra_probes() {
        let persons = vec![
            ("a".to_string(), vec![fmap(vec![0.0]), fmap(vec![0.1]), fmap(vec![9.0])]),
            ("b".to_string(), vec![fmap(vec![10.0]), fmap(vec![10.2])]),
        ];
        let r = arr_from_features("raw", &persons).unwrap();
        assert_eq!(r.rounds().len(), 2);
        // round 1: gallery a=0, b=10; probes 0.1->a, 9->b(wrong), 10.2->b  => 2/3
        assert!((r.rounds()[0] - 2.0 / 3.0).abs() < 1e-15);
        // round 2: gallery a=0.1, b=10.2; probes 0->a, 9->b(wrong), 10->b => 2/3
        assert!((r.rounds()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.per_person_counts()["a"], 3);
    }

    #[test]
    fn rejects_degenerate_datasets() {
        let single = vec![("a".to_string(), vec![fmap(vec![0.0]), fmap(vec![1.0])])];
        assert!(arr_from_features("raw", &single).is_err());
        let short =
            vec![("a".to_string(), vec![fmap(vec![0.0]), fmap(vec![1.0])]), ("b".to_string(), vec![fmap(vec![0.0])])];
        assert!(arr_from_features("raw", &short).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn person_block_order_does_not_change_arr(seed in any::<u64>(), rotate in 0usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let persons: Vec<(String, Vec<FeatureMap>)> = (0..5)
                .map(|p| (format!("p{p}"), (0..3).map(|_| fmap((0..6).map(|_| rng.random_range(0.0..1.0)).collect())).collect()))
                .collect();
            let mut shuffled = persons.clone();
            shuffled.rotate_left(rotate);
            let a = arr_from_features("raw", &persons).unwrap();
            let b = arr_from_features("raw", &shuffled).unwrap();
            prop_assert_eq!(a.rounds(), b.rounds());
        }
    }
}
