//! Runs one configured search trial: parse the description, build the
//! baseline's prior, and drive the planner to termination or the cap.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::foref::OracleForProvider;
use crate::gridmap::GridMap;
use crate::langparse::{extract_tuples, SpatialTuple, Vocabulary};
use crate::mos::{Belief, MosPomdp, MosState, PriorMode, TrialConfig};
use crate::planner::{run_episode, PlannerConfig};
use crate::seeding::derive_seed;
use crate::spatial::{language_likelihood_field, uniform_field, SpatialModelConfig};

use super::langgen::{target_vocabulary, ORACLE_BASE_SEED};
use super::HarnessError;

/// One finished trial, ready for aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_id: String,
    pub baseline: PriorMode,
    pub depth: u32,
    pub seed: u64,
    pub steps: u32,
    pub success: bool,
    pub discounted_reward: f64,
    pub language: String,
    pub tuples: Vec<SpatialTuple>,
}

impl TrialResult {
    /// Distinct relations mentioned by this trial's tuples, sorted and
    /// joined with ';' (empty when the description parsed to nothing).
    pub fn relations(&self) -> String {
        let mut relations: Vec<&str> = self.tuples.iter().map(|t| t.relation.as_str()).collect();
        relations.sort_unstable();
        relations.dedup();
        relations.join(";")
    }

    /// The results.csv row for this trial, without a trailing newline.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6},{}",
            self.trial_id,
            self.baseline,
            self.depth,
            self.seed,
            self.steps,
            self.success,
            self.discounted_reward,
            self.relations()
        )
    }
}

/// The generator's target vocabulary extended with this trial's target
/// ids, so any declared target can at least be matched by its own name.
pub fn harness_vocabulary(extra_ids: impl IntoIterator<Item = String>) -> Vocabulary {
    let base = target_vocabulary();
    let mut entries: Vec<(String, Vec<String>)> = base
        .ids()
        .map(|id| (id.to_string(), base.synonyms(id).to_vec()))
        .collect();
    for id in extra_ids {
        if !base.contains(&id) {
            entries.push((id, Vec::new()));
        }
    }
    Vocabulary::new(entries)
}

fn slu_prior(
    map: &GridMap,
    config: &TrialConfig,
    tuples: &[SpatialTuple],
) -> Result<Belief, HarnessError> {
    let provider = OracleForProvider { base_seed: ORACLE_BASE_SEED };
    let model = SpatialModelConfig::default();
    let mut fields = BTreeMap::new();
    for target in &config.targets {
        let own: Vec<SpatialTuple> =
            tuples.iter().filter(|t| t.figure == target.id).cloned().collect();
        let field = if own.is_empty() {
            uniform_field(map)
        } else {
            language_likelihood_field(&own, map, &provider, &model)?
        };
        fields.insert(target.id.clone(), field);
    }
    Ok(Belief::from_fields(map, &fields, config.robot_pose())?)
}

fn keyword_prior(
    map: &GridMap,
    config: &TrialConfig,
    tuples: &[SpatialTuple],
) -> Result<Belief, HarnessError> {
    let mut referenced: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for target in &config.targets {
        let mut grounds: Vec<String> = tuples
            .iter()
            .filter(|t| t.figure == target.id)
            .map(|t| t.ground.clone())
            .collect();
        grounds.sort_unstable();
        grounds.dedup();
        if !grounds.is_empty() {
            referenced.insert(target.id.clone(), grounds);
        }
    }
    if referenced.is_empty() {
        return Ok(Belief::uniform(map, &config.target_ids(), config.robot_pose()));
    }
    let keyword = Belief::keyword(map, &referenced, config.robot_pose())?;
    if referenced.len() == config.targets.len() {
        return Ok(keyword);
    }
    // unmentioned targets fall back to uniform alongside the keyword fields
    let mut fields = BTreeMap::new();
    for target in &config.targets {
        let field = match keyword.histogram(&target.id) {
            Some(hist) => hist.to_vec(),
            None => uniform_field(map),
        };
        fields.insert(target.id.clone(), field);
    }
    Ok(Belief::from_fields(map, &fields, config.robot_pose())?)
}

/// Builds the initial belief for `config.prior` from the parsed tuples.
pub fn build_prior(
    map: &GridMap,
    config: &TrialConfig,
    tuples: &[SpatialTuple],
) -> Result<Belief, HarnessError> {
    match config.prior {
        PriorMode::Uniform => {
            Ok(Belief::uniform(map, &config.target_ids(), config.robot_pose()))
        }
        PriorMode::Informed => {
            Ok(Belief::informed(map, &config.true_cells(), config.robot_pose())?)
        }
        PriorMode::Slu => slu_prior(map, config, tuples),
        PriorMode::Keyword => keyword_prior(map, config, tuples),
    }
}

/// Runs `config` with the default planner (1000 simulations), seeding the
/// planner stream from the trial seed.
pub fn run_trial(
    trial_id: &str,
    map: &GridMap,
    config: &TrialConfig,
) -> Result<TrialResult, HarnessError> {
    let planner = PlannerConfig {
        seed: derive_seed(config.seed, &["planner"]),
        ..PlannerConfig::default()
    };
    run_trial_configured(trial_id, map, config, planner)
}

/// Runs `config` with an explicit planner configuration.
pub fn run_trial_configured(
    trial_id: &str,
    map: &GridMap,
    config: &TrialConfig,
    planner: PlannerConfig,
) -> Result<TrialResult, HarnessError> {
    Ok(run_trial_logged(trial_id, map, config, planner)?.0)
}

/// Like `run_trial_configured`, but also hands back the full episode
/// transcript for per-step diagnostics.
pub fn run_trial_logged(
    trial_id: &str,
    map: &GridMap,
    config: &TrialConfig,
    planner: PlannerConfig,
) -> Result<(TrialResult, crate::planner::EpisodeLog), HarnessError> {
    config.validate(map)?;
    let vocabulary = harness_vocabulary(config.target_ids());
    let observation = extract_tuples(&config.language, map, &vocabulary);
    let belief = build_prior(map, config, observation.tuples())?;
    let pomdp = MosPomdp::new(map.clone(), config.sensor_config(), config.target_ids())?;
    let state = MosState::new(config.true_cells(), config.robot_pose());
    let log = run_episode(&pomdp, state, belief, planner, config.max_steps)?;
    let result = TrialResult {
        trial_id: trial_id.to_string(),
        baseline: config.prior,
        depth: config.sensor_depth,
        seed: config.seed,
        steps: log.step_count(),
        success: log.success,
        discounted_reward: log.discounted_reward,
        language: config.language.clone(),
        tuples: observation.tuples().to_vec(),
    };
    Ok((result, log))
}
