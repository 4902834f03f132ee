//! Leave-one-city-out evaluation of the image variants against the
//! random-angle baseline and the annotation-noise floor.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gridmap::GridMap;
use crate::seeding::derive_seed;

use super::loss::angular_deviation;
use super::train::{realize_samples, train};
use super::{synth_annotate, DatasetLine, ForefError, ImageVariant, ModelKind, TrainConfig};

#[derive(Debug, Clone)]
pub struct CrossvalConfig {
    pub train: TrainConfig,
    /// Share of the training pool held out for early stopping.
    pub val_fraction: f64,
    /// Random-baseline angle draws per test sample.
    pub random_draws: usize,
    /// Annotation pairs per landmark for the noise floor.
    pub noise_pairs: usize,
    pub seed: u64,
}

impl Default for CrossvalConfig {
    fn default() -> Self {
        CrossvalConfig {
            train: TrainConfig::default(),
            val_fraction: 0.2,
            random_draws: 100,
            noise_pairs: 20,
            seed: 0,
        }
    }
}

/// Mean held-out angular deviation per method for one split.
#[derive(Debug, Clone)]
pub struct SplitReport {
    pub held_out: String,
    pub ego_ctx: f64,
    pub ctx: f64,
    pub ego: f64,
    pub random: f64,
    pub noise_floor: f64,
    pub test_samples: usize,
}

#[derive(Debug, Clone)]
pub struct CrossvalReport {
    pub splits: Vec<SplitReport>,
}

impl CrossvalReport {
    pub fn mean(&self, field: impl Fn(&SplitReport) -> f64) -> f64 {
        self.splits.iter().map(&field).sum::<f64>() / self.splits.len() as f64
    }

    pub fn table(&self) -> String {
        let mut out = String::from(
            "held_out,test_samples,ego_ctx,ctx,ego,random,noise_floor\n",
        );
        for s in &self.splits {
            out.push_str(&format!(
                "{},{},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
                s.held_out, s.test_samples, s.ego_ctx, s.ctx, s.ego, s.random, s.noise_floor
            ));
        }
        out.push_str(&format!(
            "mean,,{:.4},{:.4},{:.4},{:.4},{:.4}\n",
            self.mean(|s| s.ego_ctx),
            self.mean(|s| s.ctx),
            self.mean(|s| s.ego),
            self.mean(|s| s.random),
            self.mean(|s| s.noise_floor),
        ));
        out
    }
}

/// Trains on all cities but one and evaluates on the held-out city, for
/// every city and every image variant. `datasets` maps city name to its
/// annotation lines; all referenced maps must be present in `maps`.
pub fn evaluate_crossval(
    datasets: &BTreeMap<String, Vec<DatasetLine>>,
    maps: &BTreeMap<String, GridMap>,
    config: &CrossvalConfig,
) -> Result<CrossvalReport, ForefError> {
    if datasets.len() < 5 {
        return Err(ForefError::TooFewCities { need: 5, got: datasets.len() });
    }
    let mut splits = Vec::new();
    for held_out in datasets.keys() {
        let test_lines = &datasets[held_out];
        let pool: Vec<DatasetLine> = datasets
            .iter()
            .filter(|(city, _)| *city != held_out)
            .flat_map(|(_, lines)| lines.iter().cloned())
            .collect();

        // Validation holds out whole landmarks, not raw lines: lines for
        // one landmark share an image, so a line-level split would let
        // early stopping reward recall of training images.
        let mut grounds: Vec<(String, String)> = pool
            .iter()
            .map(|line| (line.map.clone(), line.ground.clone()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &["split", held_out]));
        use rand::seq::SliceRandom;
        grounds.shuffle(&mut rng);
        let val_count = ((grounds.len() as f64 * config.val_fraction).round() as usize)
            .clamp(1, grounds.len() - 1);
        let val_grounds: BTreeSet<&(String, String)> = grounds.iter().take(val_count).collect();
        let (val_lines, train_lines): (Vec<DatasetLine>, Vec<DatasetLine>) = pool
            .into_iter()
            .partition(|line| val_grounds.contains(&(line.map.clone(), line.ground.clone())));

        let mut deviations = BTreeMap::new();
        for variant in ImageVariant::ALL {
            let train_config = TrainConfig {
                seed: derive_seed(config.seed, &["train", held_out, variant.name()]),
                ..config.train.clone()
            };
            let (model, _) =
                train(&train_lines, &val_lines, maps, variant, ModelKind::Front, &train_config)?;
            let test = realize_samples(test_lines, maps, variant)?;
            let mean = test
                .iter()
                .map(|s| angular_deviation(model.forward(&s.image.pixels), s.label))
                .sum::<f64>()
                / test.len() as f64;
            deviations.insert(variant.name(), mean);
        }

        let test = realize_samples(test_lines, maps, ImageVariant::EgoCtx)?;
        let random = random_baseline_deviation(
            &test.iter().map(|s| s.label).collect::<Vec<_>>(),
            config.random_draws,
            derive_seed(config.seed, &["random", held_out]),
        );
        let noise_floor = oracle_noise_floor(
            test_lines,
            maps,
            config.noise_pairs,
            derive_seed(config.seed, &["noise-floor", held_out]),
        )?;

        splits.push(SplitReport {
            held_out: held_out.clone(),
            ego_ctx: deviations["ego-ctx"],
            ctx: deviations["ctx"],
            ego: deviations["ego"],
            random,
            noise_floor,
            test_samples: test_lines.len(),
        });
    }
    Ok(CrossvalReport { splits })
}

/// Mean deviation of uniformly random angle guesses against the labels.
pub fn random_baseline_deviation(labels: &[f64], draws_per_label: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut count = 0usize;
    for &label in labels {
        for _ in 0..draws_per_label {
            let guess = rng.random_range(0.0..std::f64::consts::TAU);
            total += angular_deviation(guess, label);
            count += 1;
        }
    }
    total / count as f64
}

/// Mean deviation between two independent annotations of the same
/// landmark: the precision limit any predictor can reach against noisy
/// labels.
pub fn oracle_noise_floor(
    lines: &[DatasetLine],
    maps: &BTreeMap<String, GridMap>,
    pairs_per_landmark: usize,
    seed: u64,
) -> Result<f64, ForefError> {
    let grounds: BTreeSet<(&str, &str, ModelKind)> =
        lines.iter().map(|l| (l.map.as_str(), l.ground.as_str(), l.kind)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut count = 0usize;
    for (map_name, ground, kind) in grounds {
        let map = maps
            .get(map_name)
            .ok_or_else(|| ForefError::UnknownMap(map_name.to_string()))?;
        for _ in 0..pairs_per_landmark {
            let a = synth_annotate(map, ground, kind, &mut rng)?;
            let b = synth_annotate(map, ground, kind, &mut rng)?;
            total += angular_deviation(a, b);
            count += 1;
        }
    }
    Ok(total / count.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foref::ANNOTATION_NOISE_SIGMA;
    use crate::gridmap::{Landmark, LandmarkKind};
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn random_baseline_mean_is_half_pi() {
        let labels = vec![0.3; 10];
        let mean = random_baseline_deviation(&labels, 200, 7);
        assert!(
            (mean - FRAC_PI_2).abs() < 0.05,
            "expected about {FRAC_PI_2}, got {mean}"
        );
    }

    #[test]
    fn noise_floor_matches_folded_normal_mean() {
        // deviation between two annotations is |N(0, 2 sigma^2)| with
        // mean 2 sigma / sqrt(pi)
        let expected = 2.0 * ANNOTATION_NOISE_SIGMA / std::f64::consts::PI.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let normal = Normal::new(0.0, ANNOTATION_NOISE_SIGMA).unwrap();
        let mut total = 0.0;
        let n = 100_000;
        for _ in 0..n {
            let a: f64 = normal.sample(&mut rng);
            let b: f64 = normal.sample(&mut rng);
            total += angular_deviation(a, b);
        }
        let mc = total / n as f64;
        assert!((mc - expected).abs() < 0.005, "MC {mc} vs analytic {expected}");

        // the oracle pair sampler agrees
        let building =
            Landmark::new("G", LandmarkKind::Building, vec!["g".into()], vec![(10, 10)]).unwrap();
        let street =
            Landmark::new("S", LandmarkKind::Street, vec!["s".into()], vec![(15, 10)]).unwrap();
        let map = GridMap::new("c".to_string(), 41, 41, 5.0, vec![building, street]).unwrap();
        let maps = BTreeMap::from([("c".to_string(), map)]);
        let lines = vec![DatasetLine {
            map: "c".to_string(),
            ground: "G".to_string(),
            kind: ModelKind::Front,
            label_radians: 0.0,
        }];
        let floor = oracle_noise_floor(&lines, &maps, 2000, 5).unwrap();
        assert!((floor - expected).abs() < 0.02, "floor {floor} vs {expected}");
    }

    #[test]
    fn too_few_cities_is_an_error() {
        let datasets = BTreeMap::from([("only".to_string(), Vec::new())]);
        let maps = BTreeMap::new();
        assert!(matches!(
            evaluate_crossval(&datasets, &maps, &CrossvalConfig::default()),
            Err(ForefError::TooFewCities { .. })
        ));
    }
}
