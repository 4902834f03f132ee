//! Learned frames of reference: a small convolutional regressor predicts
//! the reference angle for directional prepositions from a 28x28 context
//! image around the ground landmark. A synthetic annotation oracle stands
//! in for human labels: "front" points at the nearest street, "left" is
//! absolute west, both with seeded Gaussian noise.

mod eval;
mod loss;
mod net;
mod render;
mod train;

pub use eval::{evaluate_crossval, CrossvalConfig, CrossvalReport, SplitReport};
pub use loss::{angular_deviation, loss};
pub use net::{
    batch_gradients, batch_loss, numeric_gradient, ForefModel, FLAT, TENSOR_COUNT,
    WEIGHTS_MAGIC,
};
pub use render::{render_context, CENTER_PIXEL, IMAGE_SIDE};
pub use train::{augment_samples, realize_samples, train, EarlyStopper, TrainHistory};

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_angle, Point};
use crate::gridmap::{GridMap, LandmarkKind, MapError};
use crate::langparse::{ForKind, ParseError, RelationLexicon};
use crate::seeding::derive_seed;
use crate::spatial::{ForProvider, FrameOfReference, SpatialError};

/// Standard deviation of the synthetic annotation noise, radians.
pub const ANNOTATION_NOISE_SIGMA: f64 = 0.2;

#[derive(Debug, Error)]
pub enum ForefError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("batch sizes differ or are empty: {predictions} predictions, {labels} labels")]
    BadBatch { predictions: usize, labels: usize },
    #[error("split too small: {train} training and {val} validation samples")]
    EmptySplit { train: usize, val: usize },
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("dataset references unknown map {0:?}")]
    UnknownMap(String),
    #[error("landmark {0:?} is not a building")]
    NotABuilding(String),
    #[error("relation {0:?} does not use a learned frame")]
    NoLearnedFrame(String),
    #[error("invalid weights file: {0}")]
    BadWeights(String),
    #[error("need at least {need} city datasets, got {got}")]
    TooFewCities { need: usize, got: usize },
}

/// Which rendering feeds the regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImageVariant {
    /// Egocentric shift (ground centered) with full context.
    EgoCtx,
    /// Central map crop, no shift.
    Ctx,
    /// Egocentric shift, ground only.
    Ego,
}

impl ImageVariant {
    pub const ALL: [ImageVariant; 3] = [ImageVariant::EgoCtx, ImageVariant::Ctx, ImageVariant::Ego];

    pub fn name(self) -> &'static str {
        match self {
            ImageVariant::EgoCtx => "ego-ctx",
            ImageVariant::Ctx => "ctx",
            ImageVariant::Ego => "ego",
        }
    }
}

impl std::str::FromStr for ImageVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ego-ctx" | "ego_ctx" | "egoctx" => Ok(ImageVariant::EgoCtx),
            "ctx" => Ok(ImageVariant::Ctx),
            "ego" => Ok(ImageVariant::Ego),
            other => Err(format!("unknown image variant {other:?}")),
        }
    }
}

/// Which direction a model predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Front,
    Left,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Front => "front",
            ModelKind::Left => "left",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "front" => Ok(ModelKind::Front),
            "left" => Ok(ModelKind::Left),
            other => Err(format!("unknown model kind {other:?}")),
        }
    }
}

/// 28x28 intensity image centered per variant, row-major, values in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct ContextImage {
    pub pixels: Vec<f64>,
    pub variant: ImageVariant,
    pub ground_id: String,
}

/// One labeled training example.
#[derive(Debug, Clone)]
pub struct ForefSample {
    pub image: ContextImage,
    /// Radians in [0, 2pi).
    pub label: f64,
    pub city: String,
    pub ground_id: String,
}

/// Optimization settings. Defaults follow the reference configuration;
/// tests that must converge quickly raise the learning rate explicitly.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Right-angle re-render augmentation (used for front-direction data).
    pub augment: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 1000,
            patience: 20,
            augment: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Augmentation applies to front-direction datasets only.
    pub fn for_kind(kind: ModelKind) -> Self {
        TrainConfig { augment: kind == ModelKind::Front, ..TrainConfig::default() }
    }
}

/// One dataset record; images are re-rendered from the named map on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetLine {
    pub map: String,
    pub ground: String,
    pub kind: ModelKind,
    pub label_radians: f64,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<DatasetLine>, ForefError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_str(l).map_err(ForefError::from))
        .collect()
}

pub fn save_dataset(lines: &[DatasetLine], path: impl AsRef<Path>) -> Result<(), ForefError> {
    let mut out = String::new();
    for line in lines {
        out.push_str(&serde_json::to_string(line)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Noise-free annotation angle: front points from the ground's center of
/// mass toward the closest street cell (toward the map center when the
/// map has no streets); left is absolute west.
pub fn synth_annotate_base(
    map: &GridMap,
    ground_id: &str,
    kind: ModelKind,
) -> Result<f64, ForefError> {
    let ground = map.require_landmark(ground_id)?;
    if ground.kind != LandmarkKind::Building {
        return Err(ForefError::NotABuilding(ground_id.to_string()));
    }
    match kind {
        ModelKind::Left => Ok(std::f64::consts::PI),
        ModelKind::Front => {
            let com = ground.center_of_mass();
            let streets = map.street_cells();
            let toward = if streets.is_empty() {
                Point::new(map.width as f64 / 2.0, map.height as f64 / 2.0)
            } else {
                let mut best = streets[0];
                let mut best_d2 = f64::INFINITY;
                for &(x, y) in &streets {
                    let d2 = (x as f64 - com.x).powi(2) + (y as f64 - com.y).powi(2);
                    if d2 < best_d2 {
                        best_d2 = d2;
                        best = (x, y);
                    }
                }
                Point::new(best.0 as f64, best.1 as f64)
            };
            Ok(wrap_angle((toward.y - com.y).atan2(toward.x - com.x)))
        }
    }
}

/// Annotation with seeded Gaussian noise added to the base angle.
pub fn synth_annotate(
    map: &GridMap,
    ground_id: &str,
    kind: ModelKind,
    rng: &mut impl Rng,
) -> Result<f64, ForefError> {
    let base = synth_annotate_base(map, ground_id, kind)?;
    let noise = Normal::new(0.0, ANNOTATION_NOISE_SIGMA)
        .expect("positive sigma")
        .sample(rng);
    Ok(wrap_angle(base + noise))
}

/// Annotates every building on the map `per_building` times.
pub fn synth_dataset(
    map: &GridMap,
    kind: ModelKind,
    per_building: usize,
    rng: &mut impl Rng,
) -> Result<Vec<DatasetLine>, ForefError> {
    let mut out = Vec::new();
    for lm in map.buildings() {
        for _ in 0..per_building {
            out.push(DatasetLine {
                map: map.name.clone(),
                ground: lm.id.clone(),
                kind,
                label_radians: synth_annotate(map, &lm.id, kind, rng)?,
            });
        }
    }
    Ok(out)
}

/// Metadata written next to a weights file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub variant: ModelKind,
    pub epochs: usize,
    pub val_loss: f64,
    pub seed: u64,
}

pub fn save_model(
    model: &ForefModel,
    sidecar: &ModelSidecar,
    path: impl AsRef<Path>,
) -> Result<(), ForefError> {
    let path = path.as_ref();
    model.write_weights(path)?;
    let sidecar_path = sidecar_path(path);
    std::fs::write(sidecar_path, serde_json::to_string_pretty(sidecar)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(ForefModel, ModelSidecar), ForefError> {
    let path = path.as_ref();
    let sidecar: ModelSidecar =
        serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    let model = ForefModel::read_weights(sidecar.variant, path)?;
    Ok((model, sidecar))
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".json");
    std::path::PathBuf::from(s)
}

/// The trained pair: front/behind use the front model, left/right the
/// left model.
pub struct ForefModels {
    pub front: ForefModel,
    pub left: ForefModel,
}

impl ForefModels {
    pub fn predict_kind(
        &self,
        kind: ModelKind,
        map: &GridMap,
        ground_id: &str,
    ) -> Result<FrameOfReference, ForefError> {
        let model = match kind {
            ModelKind::Front => &self.front,
            ModelKind::Left => &self.left,
        };
        let image = render_context(map, ground_id, ImageVariant::EgoCtx)?;
        let theta = wrap_angle(model.forward(&image.pixels));
        let origin = map.require_landmark(ground_id)?.center_of_mass();
        Ok(FrameOfReference::new(origin, theta))
    }

    /// Predicted frame for a relative relation; antonyms (behind, right)
    /// get their rotation later, from the direction computation.
    pub fn predict_for(
        &self,
        map: &GridMap,
        ground_id: &str,
        relation: &str,
    ) -> Result<FrameOfReference, ForefError> {
        let kind = learned_kind(relation)?;
        self.predict_kind(kind, map, ground_id)
    }
}

fn learned_kind(relation: &str) -> Result<ModelKind, ForefError> {
    let (_, for_kind) = RelationLexicon::standard().requires_for(relation)?;
    match for_kind {
        ForKind::RelativeFront => Ok(ModelKind::Front),
        ForKind::RelativeLeft => Ok(ModelKind::Left),
        _ => Err(ForefError::NoLearnedFrame(relation.to_string())),
    }
}

/// Frame provider backed by trained models.
pub struct ModelForProvider {
    pub models: ForefModels,
}

impl ForProvider for ModelForProvider {
    fn frame_for(
        &self,
        kind: ForKind,
        ground: &str,
        map: &GridMap,
    ) -> Result<FrameOfReference, SpatialError> {
        let model_kind = match kind {
            ForKind::RelativeFront => ModelKind::Front,
            ForKind::RelativeLeft => ModelKind::Left,
            _ => {
                return Err(SpatialError::Provider {
                    kind: "absolute",
                    ground: ground.to_string(),
                    message: "absolute frames never consult the provider".to_string(),
                })
            }
        };
        self.models.predict_kind(model_kind, map, ground).map_err(|e| SpatialError::Provider {
            kind: model_kind.name(),
            ground: ground.to_string(),
            message: e.to_string(),
        })
    }
}

/// Frame provider that answers from the annotation oracle with a seed
/// derived from (map, ground, kind), so every consumer of the same query
/// sees the same frame.
pub struct OracleForProvider {
    pub base_seed: u64,
}

impl OracleForProvider {
    pub fn frame(
        &self,
        kind: ModelKind,
        ground: &str,
        map: &GridMap,
    ) -> Result<FrameOfReference, ForefError> {
        let seed = derive_seed(self.base_seed, &["foref-oracle", &map.name, ground, kind.name()]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = synth_annotate(map, ground, kind, &mut rng)?;
        let origin = map.require_landmark(ground)?.center_of_mass();
        Ok(FrameOfReference::new(origin, theta))
    }
}

impl ForProvider for OracleForProvider {
    fn frame_for(
        &self,
        kind: ForKind,
        ground: &str,
        map: &GridMap,
    ) -> Result<FrameOfReference, SpatialError> {
        let model_kind = match kind {
            ForKind::RelativeFront => ModelKind::Front,
            ForKind::RelativeLeft => ModelKind::Left,
            _ => {
                return Err(SpatialError::Provider {
                    kind: "absolute",
                    ground: ground.to_string(),
                    message: "absolute frames never consult the provider".to_string(),
                })
            }
        };
        self.frame(model_kind, ground, map).map_err(|e| SpatialError::Provider {
            kind: model_kind.name(),
            ground: ground.to_string(),
            message: e.to_string(),
        })
    }
}
