//! Multi-object search POMDP: poses, actions, fan-shaped sensor,
//! deterministic transitions, and exact histogram belief filtering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::signed_angle_diff;
use crate::gridmap::{GridMap, MapError};
use crate::spatial::Field;

/// Number of discrete robot headings (multiples of 45 degrees).
pub const HEADING_COUNT: u8 = 8;
/// Cells traversed by a single Forward action (before clamping).
pub const FORWARD_STEPS: i32 = 3;
/// Reward for any rotation or forward move.
pub const REWARD_MOTION: f64 = -10.0;
/// Reward for a Detect that newly marks a target found.
pub const REWARD_DETECT_SUCCESS: f64 = 1000.0;
/// Reward for a Detect that does not newly find its target.
pub const REWARD_DETECT_FAILURE: f64 = -1000.0;
/// Step cap applied to trials unless the configuration overrides it.
pub const DEFAULT_MAX_STEPS: u32 = 200;
/// Slack so cells on the exact fov boundary ray are included.
const FOV_ANGLE_SLACK: f64 = 1e-9;
/// Belief mass below which a histogram is reset to uniform.
const MASS_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MosError {
    #[error("failed to read trial config: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse trial config: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("no targets declared")]
    NoTargets,
    #[error("duplicate target id `{0}`")]
    DuplicateTarget(String),
    #[error("unknown target id `{0}`")]
    UnknownTarget(String),
    #[error("target `{id}` cell ({x}, {y}) is out of bounds")]
    TargetOutOfBounds { id: String, x: i32, y: i32 },
    #[error("robot cell ({x}, {y}) is out of bounds")]
    RobotOutOfBounds { x: i32, y: i32 },
    #[error("heading index {0} must be below {HEADING_COUNT}")]
    BadHeading(u8),
    #[error("sensor depth {0} is not one of 3, 4, 5")]
    BadTrialDepth(u32),
    #[error("sensor depth must be at least 1")]
    ZeroDepth,
    #[error("false negative rate {0} must lie in [0, 1)")]
    BadEpsilon(f64),
    #[error("prior `{0}` requires a language description")]
    MissingLanguage(String),
    #[error("belief field for target `{0}` has no probability mass")]
    EmptyField(String),
    #[error("belief field for target `{id}` has {got} cells, map has {want}")]
    FieldSizeMismatch { id: String, got: usize, want: usize },
    #[error("no landmark cells referenced for target `{0}`")]
    NoReferencedCells(String),
    #[error("max_steps must be at least 1")]
    ZeroSteps,
}

/// Robot pose: integer cell plus one of eight 45-degree headings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RobotPose {
    pub x: i32,
    pub y: i32,
    /// Heading index; the angle is `heading * 45` degrees.
    pub heading: u8,
}

impl RobotPose {
    pub fn new(x: i32, y: i32, heading: u8) -> Self {
        Self { x, y, heading: heading % HEADING_COUNT }
    }

    pub fn heading_radians(&self) -> f64 {
        f64::from(self.heading) * std::f64::consts::FRAC_PI_4
    }

    pub fn cell(&self) -> (i32, i32) {
        (self.x, self.y)
    }
}

/// Full hidden state: static target cells, robot pose, found set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MosState {
    pub target_positions: BTreeMap<String, (i32, i32)>,
    pub robot: RobotPose,
    pub found: BTreeSet<String>,
}

impl MosState {
    pub fn new(target_positions: BTreeMap<String, (i32, i32)>, robot: RobotPose) -> Self {
        Self { target_positions, robot, found: BTreeSet::new() }
    }

    pub fn all_found(&self) -> bool {
        self.target_positions.keys().all(|id| self.found.contains(id))
    }
}

/// Declaration order doubles as the planner's fixed tie-break order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    RotateLeft,
    RotateRight,
    Forward,
    Detect(String),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::RotateLeft => write!(f, "rotate-left"),
            Action::RotateRight => write!(f, "rotate-right"),
            Action::Forward => write!(f, "forward"),
            Action::Detect(id) => write!(f, "detect:{id}"),
        }
    }
}

impl Action {
    pub fn is_motion(&self) -> bool {
        !matches!(self, Action::Detect(_))
    }
}

/// Per-target sensor reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sighting {
    DetectedAt(i32, i32),
    NotDetected,
}

/// One sensor frame covering every declared target.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SensorObservation {
    pub sightings: BTreeMap<String, Sighting>,
}

impl SensorObservation {
    pub fn sighting(&self, id: &str) -> Sighting {
        self.sightings.get(id).copied().unwrap_or(Sighting::NotDetected)
    }

    pub fn any_detection(&self) -> bool {
        self.sightings.values().any(|s| matches!(s, Sighting::DetectedAt(_, _)))
    }
}

/// Fan sensor geometry and reliability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    /// Half-angle of the fan; the full field of view is twice this.
    pub fov_half_angle: f64,
    /// Maximum Euclidean range in cells.
    pub depth: u32,
    /// False negative rate for in-fan targets.
    pub epsilon: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self { fov_half_angle: std::f64::consts::FRAC_PI_8, depth: 3, epsilon: 0.0 }
    }
}

impl SensorConfig {
    pub fn with_depth(depth: u32) -> Self {
        Self { depth, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), MosError> {
        if self.depth == 0 {
            return Err(MosError::ZeroDepth);
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(MosError::BadEpsilon(self.epsilon));
        }
        Ok(())
    }
}

/// All in-bounds cells other than the robot's own whose center lies within
/// `depth` and whose bearing is within the fan half-angle of the heading.
pub fn cells_in_fov(pose: &RobotPose, sensor: &SensorConfig, map: &GridMap) -> Vec<(i32, i32)> {
    let depth = sensor.depth as i32;
    let heading = pose.heading_radians();
    let mut cells = Vec::new();
    for dy in -depth..=depth {
        for dx in -depth..=depth {
            if dx == 0 && dy == 0 {
                continue;
            }
            if dx * dx + dy * dy > depth * depth {
                continue;
            }
            let (x, y) = (pose.x + dx, pose.y + dy);
            if !map.in_bounds((x, y)) {
                continue;
            }
            let bearing = f64::from(dy).atan2(f64::from(dx));
            if signed_angle_diff(bearing, heading).abs()
                <= sensor.fov_half_angle + FOV_ANGLE_SLACK
            {
                cells.push((x, y));
            }
        }
    }
    cells.sort_unstable();
    cells
}

/// Precomputed fov sets for every (cell, heading) pair of one map/sensor.
#[derive(Debug, Clone)]
pub struct FovTable {
    width: i32,
    fans: Vec<Vec<(i32, i32)>>,
}

impl FovTable {
    pub fn new(map: &GridMap, sensor: &SensorConfig) -> Self {
        let (w, h) = (map.width as i32, map.height as i32);
        let mut fans = Vec::with_capacity((w * h) as usize * HEADING_COUNT as usize);
        for y in 0..h {
            for x in 0..w {
                for heading in 0..HEADING_COUNT {
                    fans.push(cells_in_fov(&RobotPose::new(x, y, heading), sensor, map));
                }
            }
        }
        Self { width: w, fans }
    }

    pub fn get(&self, pose: &RobotPose) -> &[(i32, i32)] {
        let idx = ((pose.y * self.width + pose.x) * i32::from(HEADING_COUNT))
            + i32::from(pose.heading % HEADING_COUNT);
        &self.fans[idx as usize]
    }

    pub fn contains(&self, pose: &RobotPose, cell: (i32, i32)) -> bool {
        self.get(pose).binary_search(&cell).is_ok()
    }
}

/// The search problem: map, sensor, declared targets, and cached fov sets.
#[derive(Debug, Clone)]
pub struct MosPomdp {
    map: GridMap,
    sensor: SensorConfig,
    targets: Vec<String>,
    actions: Vec<Action>,
    fov: FovTable,
}

impl MosPomdp {
    pub fn new(
        map: GridMap,
        sensor: SensorConfig,
        mut targets: Vec<String>,
    ) -> Result<Self, MosError> {
        sensor.validate()?;
        if targets.is_empty() {
            return Err(MosError::NoTargets);
        }
        targets.sort_unstable();
        if let Some(dup) = targets.windows(2).find(|w| w[0] == w[1]) {
            return Err(MosError::DuplicateTarget(dup[0].clone()));
        }
        let mut actions = vec![Action::RotateLeft, Action::RotateRight, Action::Forward];
        actions.extend(targets.iter().map(|id| Action::Detect(id.clone())));
        let fov = FovTable::new(&map, &sensor);
        Ok(Self { map, sensor, targets, actions, fov })
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn sensor(&self) -> &SensorConfig {
        &self.sensor
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    /// Fixed action order: rotations, forward, then detects by target id.
    pub fn legal_actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn fov_at(&self, pose: &RobotPose) -> &[(i32, i32)] {
        self.fov.get(pose)
    }

    /// The robot pose component of the transition; shared with the filter.
    pub fn pose_after(&self, pose: &RobotPose, action: &Action) -> RobotPose {
        match action {
            Action::RotateLeft => RobotPose::new(pose.x, pose.y, (pose.heading + 1) % HEADING_COUNT),
            Action::RotateRight => {
                RobotPose::new(pose.x, pose.y, (pose.heading + HEADING_COUNT - 1) % HEADING_COUNT)
            }
            Action::Forward => {
                let theta = pose.heading_radians();
                let (cos, sin) = (theta.cos(), theta.sin());
                let (mut x, mut y) = (pose.x, pose.y);
                // displacement accumulates along the continuous ray and is
                // rounded per step, so diagonal moves land on (2, 2) not (3, 3)
                for k in 1..=FORWARD_STEPS {
                    let nx = pose.x + (cos * f64::from(k)).round() as i32;
                    let ny = pose.y + (sin * f64::from(k)).round() as i32;
                    if !self.map.in_bounds((nx, ny)) {
                        break;
                    }
                    x = nx;
                    y = ny;
                }
                RobotPose::new(x, y, pose.heading)
            }
            Action::Detect(_) => *pose,
        }
    }

    /// Deterministic dynamics: targets are static, rotations and forward
    /// moves relocate the robot, Detect(i) marks i found iff its cell is
    /// inside the current fan.
    pub fn transition(&self, state: &MosState, action: &Action) -> MosState {
        let mut next = state.clone();
        next.robot = self.pose_after(&state.robot, action);
        if let Action::Detect(id) = action {
            if let Some(&cell) = state.target_positions.get(id) {
                if self.fov.contains(&next.robot, cell) {
                    next.found.insert(id.clone());
                }
            }
        }
        next
    }

    /// Each unfound target inside the fan is seen at its true cell with
    /// probability 1 - epsilon; found or out-of-fan targets are never seen.
    pub fn sensor_observation<R: Rng + ?Sized>(
        &self,
        state: &MosState,
        rng: &mut R,
    ) -> SensorObservation {
        let fan = self.fov.get(&state.robot);
        let mut sightings = BTreeMap::new();
        for (id, &cell) in &state.target_positions {
            let seen = !state.found.contains(id)
                && fan.binary_search(&cell).is_ok()
                && (self.sensor.epsilon == 0.0 || rng.random::<f64>() >= self.sensor.epsilon);
            let sighting =
                if seen { Sighting::DetectedAt(cell.0, cell.1) } else { Sighting::NotDetected };
            sightings.insert(id.clone(), sighting);
        }
        SensorObservation { sightings }
    }

    /// Motion costs a flat -10; Detect pays +1000 only when it newly adds
    /// its target to the found set and -1000 otherwise.
    pub fn reward(&self, state: &MosState, action: &Action, next: &MosState) -> f64 {
        match action {
            Action::Detect(id) => {
                if next.found.contains(id) && !state.found.contains(id) {
                    REWARD_DETECT_SUCCESS
                } else {
                    REWARD_DETECT_FAILURE
                }
            }
            _ => REWARD_MOTION,
        }
    }

    /// One generative step: transition, then sense at the new pose. The
    /// sensor uses the pre-action found set so a successful Detect is
    /// itself observable.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &MosState,
        action: &Action,
        rng: &mut R,
    ) -> (MosState, SensorObservation, f64) {
        let next = self.transition(state, action);
        let probe = MosState {
            target_positions: next.target_positions.clone(),
            robot: next.robot,
            found: state.found.clone(),
        };
        let observation = self.sensor_observation(&probe, rng);
        let reward = self.reward(state, action, &next);
        (next, observation, reward)
    }

    /// Exact Bayes filter step. The pose moves deterministically; each
    /// unfound target's histogram collapses to the detection cell or has
    /// the fan cells scaled by epsilon and is renormalized. Mass below
    /// 1e-12 resets to uniform.
    pub fn belief_update(
        &self,
        belief: &Belief,
        action: &Action,
        observation: &SensorObservation,
    ) -> Belief {
        let robot = self.pose_after(&belief.robot, action);
        let fan = self.fov.get(&robot);
        let mut next = belief.clone();
        next.robot = robot;
        for (id, hist) in &mut next.histograms {
            if belief.found.contains(id) {
                continue;
            }
            match observation.sighting(id) {
                Sighting::DetectedAt(x, y) => {
                    hist.fill(0.0);
                    hist[self.map.cell_index((x, y))] = 1.0;
                }
                Sighting::NotDetected => {
                    for &(x, y) in fan {
                        hist[self.map.cell_index((x, y))] *= self.sensor.epsilon;
                    }
                    normalize_or_reset(hist);
                }
            }
        }
        if let Action::Detect(id) = action {
            if matches!(observation.sighting(id), Sighting::DetectedAt(_, _)) {
                next.found.insert(id.clone());
            }
        }
        next
    }
}

fn normalize_or_reset(hist: &mut [f64]) {
    let mass: f64 = hist.iter().sum();
    if mass < MASS_FLOOR {
        let uniform = 1.0 / hist.len() as f64;
        hist.fill(uniform);
    } else {
        for p in hist.iter_mut() {
            *p /= mass;
        }
    }
}

/// Known robot pose, found set, and one normalized histogram per target.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    robot: RobotPose,
    found: BTreeSet<String>,
    histograms: BTreeMap<String, Vec<f64>>,
    width: i32,
    cells: usize,
}

impl Belief {
    /// Uniform prior over the whole map for every target.
    pub fn uniform(map: &GridMap, targets: &[String], robot: RobotPose) -> Self {
        let cells = map.cell_count();
        let hist = vec![1.0 / cells as f64; cells];
        let histograms = targets.iter().map(|id| (id.clone(), hist.clone())).collect();
        Self { robot, found: BTreeSet::new(), histograms, width: map.width as i32, cells }
    }

    /// Prior from per-target probability fields (already over map cells).
    pub fn from_fields(
        map: &GridMap,
        fields: &BTreeMap<String, Field>,
        robot: RobotPose,
    ) -> Result<Self, MosError> {
        let cells = map.cell_count();
        let mut histograms = BTreeMap::new();
        for (id, field) in fields {
            if field.len() != cells {
                return Err(MosError::FieldSizeMismatch {
                    id: id.clone(),
                    got: field.len(),
                    want: cells,
                });
            }
            let mass: f64 = field.iter().sum();
            if !(mass > 0.0) || field.iter().any(|p| *p < 0.0 || !p.is_finite()) {
                return Err(MosError::EmptyField(id.clone()));
            }
            histograms.insert(id.clone(), field.iter().map(|p| p / mass).collect());
        }
        if histograms.is_empty() {
            return Err(MosError::NoTargets);
        }
        Ok(Self { robot, found: BTreeSet::new(), histograms, width: map.width as i32, cells })
    }

    /// Keyword prior: 0.9 of the mass shared by the referenced landmarks'
    /// cells dilated by `KEYWORD_DILATION` (Chebyshev), 0.1 spread over the
    /// rest of the map.
    pub fn keyword(
        map: &GridMap,
        referenced: &BTreeMap<String, Vec<String>>,
        robot: RobotPose,
    ) -> Result<Self, MosError> {
        let cells = map.cell_count();
        let mut histograms = BTreeMap::new();
        for (target, landmarks) in referenced {
            let mut inside = vec![false; cells];
            for lm_id in landmarks {
                let lm = map.require_landmark(lm_id)?;
                for &(cx, cy) in lm.cells() {
                    for dy in -KEYWORD_DILATION..=KEYWORD_DILATION {
                        for dx in -KEYWORD_DILATION..=KEYWORD_DILATION {
                            let (x, y) = (cx + dx, cy + dy);
                            if map.in_bounds((x, y)) {
                                inside[map.cell_index((x, y))] = true;
                            }
                        }
                    }
                }
            }
            let n_inside = inside.iter().filter(|b| **b).count();
            if n_inside == 0 {
                return Err(MosError::NoReferencedCells(target.clone()));
            }
            let n_outside = cells - n_inside;
            let (p_in, p_out) = if n_outside == 0 {
                (1.0 / n_inside as f64, 0.0)
            } else {
                (0.9 / n_inside as f64, 0.1 / n_outside as f64)
            };
            let hist = inside.iter().map(|&b| if b { p_in } else { p_out }).collect();
            histograms.insert(target.clone(), hist);
        }
        if histograms.is_empty() {
            return Err(MosError::NoTargets);
        }
        Ok(Self { robot, found: BTreeSet::new(), histograms, width: map.width as i32, cells })
    }

    /// Informed prior: unit-sigma Gaussian bump centered on each target's
    /// true cell.
    pub fn informed(
        map: &GridMap,
        true_cells: &BTreeMap<String, (i32, i32)>,
        robot: RobotPose,
    ) -> Result<Self, MosError> {
        let cells = map.cell_count();
        let mut histograms = BTreeMap::new();
        for (id, &(tx, ty)) in true_cells {
            let mut hist = vec![0.0; cells];
            for y in 0..map.height as i32 {
                for x in 0..map.width as i32 {
                    let d2 = f64::from((x - tx).pow(2) + (y - ty).pow(2));
                    hist[map.cell_index((x, y))] = (-d2 / 2.0).exp();
                }
            }
            normalize_or_reset(&mut hist);
            histograms.insert(id.clone(), hist);
        }
        if histograms.is_empty() {
            return Err(MosError::NoTargets);
        }
        Ok(Self { robot, found: BTreeSet::new(), histograms, width: map.width as i32, cells })
    }

    pub fn robot(&self) -> RobotPose {
        self.robot
    }

    pub fn found(&self) -> &BTreeSet<String> {
        &self.found
    }

    pub fn target_ids(&self) -> impl Iterator<Item = &str> {
        self.histograms.keys().map(String::as_str)
    }

    pub fn all_found(&self) -> bool {
        self.histograms.keys().all(|id| self.found.contains(id))
    }

    pub fn histogram(&self, id: &str) -> Option<&[f64]> {
        self.histograms.get(id).map(Vec::as_slice)
    }

    pub fn probability(&self, id: &str, cell: (i32, i32)) -> f64 {
        let idx = (cell.1 * self.width + cell.0) as usize;
        self.histograms.get(id).map_or(0.0, |h| h[idx])
    }

    /// Highest-probability cell, lexicographically first among ties.
    pub fn argmax_cell(&self, id: &str) -> Option<(i32, i32)> {
        let hist = self.histograms.get(id)?;
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, &p) in hist.iter().enumerate() {
            let (x, y) = ((i as i32) % self.width, (i as i32) / self.width);
            let key_better = p > best.1
                || (p == best.1 && (x, y) < ((best.0 as i32) % self.width, (best.0 as i32) / self.width));
            if key_better {
                best = (i, p);
            }
        }
        Some(((best.0 as i32) % self.width, (best.0 as i32) / self.width))
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        self.histograms.values().all(|h| {
            let mass: f64 = h.iter().sum();
            (mass - 1.0).abs() <= tol && h.iter().all(|p| *p >= 0.0)
        })
    }

    /// Precomputes per-target cumulative distributions for fast state draws.
    pub fn sampler(&self) -> Result<BeliefSampler, MosError> {
        let mut entries = Vec::with_capacity(self.histograms.len());
        for (id, hist) in &self.histograms {
            let mut cdf = Vec::with_capacity(hist.len());
            let mut acc = 0.0;
            for p in hist {
                acc += p;
                cdf.push(acc);
            }
            if acc <= 0.0 {
                return Err(MosError::EmptyField(id.clone()));
            }
            entries.push((id.clone(), cdf, acc));
        }
        Ok(BeliefSampler {
            robot: self.robot,
            found: self.found.clone(),
            width: self.width,
            entries,
        })
    }
}

/// Samples full states from a belief via independent per-target draws.
#[derive(Debug, Clone)]
pub struct BeliefSampler {
    robot: RobotPose,
    found: BTreeSet<String>,
    width: i32,
    entries: Vec<(String, Vec<f64>, f64)>,
}

impl BeliefSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MosState {
        let mut target_positions = BTreeMap::new();
        for (id, cdf, total) in &self.entries {
            let u = rng.random::<f64>() * total;
            let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            let cell = ((idx as i32) % self.width, (idx as i32) / self.width);
            target_positions.insert(id.clone(), cell);
        }
        MosState { target_positions, robot: self.robot, found: self.found.clone() }
    }
}

/// Chebyshev radius used by the keyword prior's landmark dilation.
pub const KEYWORD_DILATION: i32 = 2;

/// How a trial's initial belief is constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorMode {
    Slu,
    Keyword,
    Uniform,
    Informed,
}

impl PriorMode {
    pub const ALL: [PriorMode; 4] =
        [PriorMode::Slu, PriorMode::Keyword, PriorMode::Uniform, PriorMode::Informed];

    pub fn name(&self) -> &'static str {
        match self {
            PriorMode::Slu => "slu",
            PriorMode::Keyword => "keyword",
            PriorMode::Uniform => "uniform",
            PriorMode::Informed => "informed",
        }
    }
}

impl std::str::FromStr for PriorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "slu" => Ok(PriorMode::Slu),
            "keyword" => Ok(PriorMode::Keyword),
            "uniform" => Ok(PriorMode::Uniform),
            "informed" => Ok(PriorMode::Informed),
            other => Err(format!("unknown prior mode `{other}`")),
        }
    }
}

impl fmt::Display for PriorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One declared search target and its true cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialTarget {
    pub id: String,
    pub cell: (i32, i32),
}

fn default_max_steps() -> u32 {
    DEFAULT_MAX_STEPS
}

/// A single search trial: map reference, ground truth, sensor, prior, seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    /// Map file path or generated-city name; resolved by the caller.
    pub map: String,
    pub targets: Vec<TrialTarget>,
    /// Robot start as [x, y, heading_index].
    pub robot: (i32, i32, u8),
    pub sensor_depth: u32,
    #[serde(default)]
    pub epsilon: f64,
    pub prior: PriorMode,
    #[serde(default)]
    pub language: String,
    pub seed: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u32,
}

impl TrialConfig {
    pub fn load(path: &Path) -> Result<Self, MosError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(json: &str) -> Result<Self, MosError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trial config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), MosError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn sensor_config(&self) -> SensorConfig {
        SensorConfig {
            depth: self.sensor_depth,
            epsilon: self.epsilon,
            ..SensorConfig::default()
        }
    }

    pub fn robot_pose(&self) -> RobotPose {
        RobotPose::new(self.robot.0, self.robot.1, self.robot.2)
    }

    pub fn target_ids(&self) -> Vec<String> {
        self.targets.iter().map(|t| t.id.clone()).collect()
    }

    pub fn true_cells(&self) -> BTreeMap<String, (i32, i32)> {
        self.targets.iter().map(|t| (t.id.clone(), t.cell)).collect()
    }

    pub fn validate(&self, map: &GridMap) -> Result<(), MosError> {
        if self.targets.is_empty() {
            return Err(MosError::NoTargets);
        }
        let mut seen = BTreeSet::new();
        for target in &self.targets {
            if !seen.insert(&target.id) {
                return Err(MosError::DuplicateTarget(target.id.clone()));
            }
            let (x, y) = target.cell;
            if !map.in_bounds((x, y)) {
                return Err(MosError::TargetOutOfBounds { id: target.id.clone(), x, y });
            }
        }
        let (rx, ry, heading) = self.robot;
        if !map.in_bounds((rx, ry)) {
            return Err(MosError::RobotOutOfBounds { x: rx, y: ry });
        }
        if heading >= HEADING_COUNT {
            return Err(MosError::BadHeading(heading));
        }
        if ![3, 4, 5].contains(&self.sensor_depth) {
            return Err(MosError::BadTrialDepth(self.sensor_depth));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(MosError::BadEpsilon(self.epsilon));
        }
        if matches!(self.prior, PriorMode::Slu | PriorMode::Keyword)
            && self.language.trim().is_empty()
        {
            return Err(MosError::MissingLanguage(self.prior.name().to_string()));
        }
        if self.max_steps == 0 {
            return Err(MosError::ZeroSteps);
        }
        Ok(())
    }
}
