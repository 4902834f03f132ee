//! Mini-batch training loop with right-angle map re-render augmentation
//! and early stopping on validation loss.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::wrap_angle;
use crate::gridmap::GridMap;

use super::net::{batch_gradients, batch_loss, ForefModel};
use super::render::render_context;
use super::{DatasetLine, ForefError, ForefSample, ImageVariant, ModelKind, TrainConfig};

/// Tracks the best validation loss and how long since it improved.
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        EarlyStopper { patience, best: f64::INFINITY, best_epoch: 0, since_best: 0 }
    }

    /// Records the loss for `epoch` (1-based); returns true when this is
    /// a new best.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> bool {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.since_best = 0;
            true
        } else {
            self.since_best += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.since_best >= self.patience
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

#[derive(Debug, Clone)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub epochs_run: usize,
    pub train_samples: usize,
}

/// Renders dataset lines into training samples against their maps.
pub fn realize_samples(
    lines: &[DatasetLine],
    maps: &BTreeMap<String, GridMap>,
    variant: ImageVariant,
) -> Result<Vec<ForefSample>, ForefError> {
    lines
        .iter()
        .map(|line| {
            let map = maps
                .get(&line.map)
                .ok_or_else(|| ForefError::UnknownMap(line.map.clone()))?;
            Ok(ForefSample {
                image: render_context(map, &line.ground, variant)?,
                label: wrap_angle(line.label_radians),
                city: line.map.clone(),
                ground_id: line.ground.clone(),
            })
        })
        .collect()
}

/// Expands samples with re-renders of each map rotated by 90, 180, and
/// 270 degrees, rotating labels to match. Output size is exactly 4x the
/// input size.
pub fn augment_samples(
    lines: &[DatasetLine],
    maps: &BTreeMap<String, GridMap>,
    variant: ImageVariant,
) -> Result<Vec<ForefSample>, ForefError> {
    let mut out = realize_samples(lines, maps, variant)?;
    for quarters in 1..4u32 {
        for line in lines {
            let map = maps
                .get(&line.map)
                .ok_or_else(|| ForefError::UnknownMap(line.map.clone()))?;
            let rotated = map.rotated_quarters(quarters);
            out.push(ForefSample {
                image: render_context(&rotated, &line.ground, variant)?,
                label: wrap_angle(
                    line.label_radians + quarters as f64 * std::f64::consts::FRAC_PI_2,
                ),
                city: line.map.clone(),
                ground_id: line.ground.clone(),
            });
        }
    }
    Ok(out)
}

/// Trains a fresh model of `kind` on `train_lines`, early-stopping on
/// `val_lines`, and returns the best-validation checkpoint.
pub fn train(
    train_lines: &[DatasetLine],
    val_lines: &[DatasetLine],
    maps: &BTreeMap<String, GridMap>,
    variant: ImageVariant,
    kind: ModelKind,
    config: &TrainConfig,
) -> Result<(ForefModel, TrainHistory), ForefError> {
    let train_samples = if config.augment {
        augment_samples(train_lines, maps, variant)?
    } else {
        realize_samples(train_lines, maps, variant)?
    };
    let val_samples = realize_samples(val_lines, maps, variant)?;
    if train_samples.len() < 2 || val_samples.is_empty() {
        return Err(ForefError::EmptySplit {
            train: train_samples.len(),
            val: val_samples.len(),
        });
    }

    let mut model = ForefModel::new(kind, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut stopper = EarlyStopper::new(config.patience);
    let mut best_snapshot = model.snapshot();
    let mut history = TrainHistory {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
        epochs_run: 0,
        train_samples: train_samples.len(),
    };

    let val_images: Vec<&[f64]> = val_samples.iter().map(|s| s.image.pixels.as_slice()).collect();
    let val_labels: Vec<f64> = val_samples.iter().map(|s| s.label).collect();
    let mut order: Vec<usize> = (0..train_samples.len()).collect();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let images: Vec<&[f64]> =
                batch.iter().map(|&i| train_samples[i].image.pixels.as_slice()).collect();
            let labels: Vec<f64> = batch.iter().map(|&i| train_samples[i].label).collect();
            let (loss, grads) = batch_gradients(&model, &images, &labels);
            epoch_loss += loss * batch.len() as f64;
            model.adam_step(&grads, config);
        }
        let train_loss = epoch_loss / train_samples.len() as f64;
        let val_loss = batch_loss(&model, &val_images, &val_labels);
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(ForefError::NonFiniteLoss { epoch });
        }
        history.train_loss.push(train_loss);
        history.val_loss.push(val_loss);
        history.epochs_run = epoch;
        if stopper.observe(epoch, val_loss) {
            best_snapshot = model.snapshot();
        }
        if stopper.should_stop() {
            break;
        }
    }

    model.restore(&best_snapshot);
    history.best_epoch = stopper.best_epoch();
    history.best_val_loss = stopper.best_loss();
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::{Landmark, LandmarkKind};

    fn maps_one_city() -> BTreeMap<String, GridMap> {
        let building = |id: &str, x: i32, y: i32| {
            Landmark::new(
                id,
                LandmarkKind::Building,
                vec![id.to_lowercase()],
                vec![(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)],
            )
            .unwrap()
        };
        let street = Landmark::new(
            "MainSt",
            LandmarkKind::Street,
            vec!["main street".to_string()],
            (5..36).map(|x| (x, 20)).collect(),
        )
        .unwrap();
        let map = GridMap::new(
            "c0",
            41,
            41,
            5.0,
            vec![
                building("A", 8, 10),
                building("B", 24, 26),
                building("C", 14, 30),
                building("D", 30, 12),
                street,
            ],
        )
        .unwrap();
        BTreeMap::from([("c0".to_string(), map)])
    }

    fn lines(label: f64) -> Vec<DatasetLine> {
        ["A", "B", "C", "D"]
            .iter()
            .map(|g| DatasetLine {
                map: "c0".to_string(),
                ground: g.to_string(),
                kind: ModelKind::Front,
                label_radians: label,
            })
            .collect()
    }

    #[test]
    fn early_stopper_patience_definition() {
        let mut stopper = EarlyStopper::new(20);
        for epoch in 1..=21 {
            stopper.observe(epoch, 1.0);
            if epoch < 21 {
                assert!(!stopper.should_stop(), "stopped early at {epoch}");
            }
        }
        assert!(stopper.should_stop());
        assert_eq!(stopper.best_epoch(), 1);
    }

    #[test]
    fn augmentation_quadruples_samples_and_rotates_labels() {
        let maps = maps_one_city();
        let base = lines(0.25);
        let augmented = augment_samples(&base, &maps, ImageVariant::EgoCtx).unwrap();
        assert_eq!(augmented.len(), base.len() * 4);
        let labels: Vec<f64> = augmented.iter().map(|s| s.label).collect();
        assert!((labels[0] - 0.25).abs() < 1e-12);
        assert!((labels[base.len()] - (0.25 + std::f64::consts::FRAC_PI_2)).abs() < 1e-12);
    }

    #[test]
    fn constant_label_dataset_trains_to_near_zero_loss() {
        let maps = maps_one_city();
        let train_lines = lines(1.0);
        let val_lines = lines(1.0);
        let config = TrainConfig {
            learning_rate: 1e-3,
            max_epochs: 500,
            patience: 500,
            augment: false,
            seed: 3,
            ..TrainConfig::default()
        };
        let (_, history) =
            train(&train_lines, &val_lines, &maps, ImageVariant::EgoCtx, ModelKind::Front, &config)
                .unwrap();
        let final_loss = *history.train_loss.last().unwrap();
        assert!(final_loss < 0.01, "loss stayed at {final_loss}");
    }

    #[test]
    fn empty_val_split_is_an_error() {
        let maps = maps_one_city();
        let err = train(
            &lines(0.0),
            &[],
            &maps,
            ImageVariant::EgoCtx,
            ModelKind::Front,
            &TrainConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, ForefError::EmptySplit { .. }));
    }
}
