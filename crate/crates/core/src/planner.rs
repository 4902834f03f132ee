//! Online planning: Monte Carlo tree search over the search POMDP with
//! root states sampled from the exact histogram belief.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mos::{Action, Belief, MosError, MosPomdp, MosState, SensorObservation};

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error(transparent)]
    Mos(#[from] MosError),
    #[error("planner config invalid: {0}")]
    BadConfig(&'static str),
}

/// Search budget and tree-policy constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Tree search iterations per planning step.
    pub simulations: u32,
    /// Discount factor for both planning and episode scoring.
    pub discount: f64,
    /// UCB1 exploration constant; sized to the +-1000 reward scale.
    pub exploration: f64,
    /// Depth at which simulations and rollouts truncate.
    pub max_depth: u32,
    /// Seed for the per-episode random stream.
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { simulations: 1000, discount: 0.95, exploration: 1000.0, max_depth: 60, seed: 0 }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.simulations == 0 {
            return Err(PlannerError::BadConfig("simulations must be at least 1"));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(PlannerError::BadConfig("discount must lie in (0, 1)"));
        }
        if !(self.exploration > 0.0) {
            return Err(PlannerError::BadConfig("exploration constant must be positive"));
        }
        Ok(())
    }

    /// Magnitude bound on optimal root values: one detect payout plus
    /// discounted motion costs forever.
    pub fn value_bound(&self) -> f64 {
        1000.0 + 10.0 / (1.0 - self.discount)
    }
}

/// Per-action statistics at one tree node.
#[derive(Debug, Clone)]
struct ActionStat {
    visits: u32,
    q: f64,
    children: BTreeMap<SensorObservation, usize>,
}

/// Belief-history node; actions are indexed in the fixed legal order.
#[derive(Debug, Clone)]
struct Node {
    visits: u32,
    actions: Vec<ActionStat>,
}

impl Node {
    fn new(action_count: usize) -> Self {
        let stat = ActionStat { visits: 0, q: 0.0, children: BTreeMap::new() };
        Self { visits: 0, actions: vec![stat; action_count] }
    }
}

/// What one planning call decided, with root diagnostics.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub action: Action,
    /// Mean return per visited root action.
    pub root_q: BTreeMap<Action, f64>,
    pub root_visits: BTreeMap<Action, u32>,
    pub simulations: u32,
}

/// One executed environment step with the plan that chose it.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub plan: PlanOutcome,
    pub observation: SensorObservation,
    pub reward: f64,
    pub next_state: MosState,
    pub next_belief: Belief,
}

pub struct Planner<'a> {
    pomdp: &'a MosPomdp,
    config: PlannerConfig,
}

struct SearchTree<'a> {
    pomdp: &'a MosPomdp,
    config: &'a PlannerConfig,
    nodes: Vec<Node>,
}

impl<'a> SearchTree<'a> {
    fn new(pomdp: &'a MosPomdp, config: &'a PlannerConfig) -> Self {
        let root = Node::new(pomdp.legal_actions().len());
        Self { pomdp, config, nodes: vec![root] }
    }

    /// First unvisited action in fixed order, else the UCB1 argmax with
    /// ties broken by fixed order.
    fn select(&self, node_id: usize) -> usize {
        let node = &self.nodes[node_id];
        if let Some(i) = node.actions.iter().position(|s| s.visits == 0) {
            return i;
        }
        let ln_parent = f64::from(node.visits).ln();
        let mut best = 0;
        let mut best_value = f64::NEG_INFINITY;
        for (i, stat) in node.actions.iter().enumerate() {
            let bonus = self.config.exploration * (ln_parent / f64::from(stat.visits)).sqrt();
            let value = stat.q + bonus;
            if value > best_value {
                best_value = value;
                best = i;
            }
        }
        best
    }

    fn simulate<R: Rng + ?Sized>(
        &mut self,
        state: &MosState,
        node_id: usize,
        depth: u32,
        rng: &mut R,
    ) -> f64 {
        if depth >= self.config.max_depth || state.all_found() {
            return 0.0;
        }
        let action_idx = self.select(node_id);
        let action = self.pomdp.legal_actions()[action_idx].clone();
        let (next, observation, reward) = self.pomdp.step(state, &action, rng);
        let future = if depth + 1 >= self.config.max_depth || next.all_found() {
            0.0
        } else if let Some(&child) = self.nodes[node_id].actions[action_idx]
            .children
            .get(&observation)
        {
            self.simulate(&next, child, depth + 1, rng)
        } else {
            // expand exactly one node, then estimate by rollout
            let child = self.nodes.len();
            self.nodes.push(Node::new(self.pomdp.legal_actions().len()));
            self.nodes[node_id].actions[action_idx].children.insert(observation, child);
            self.rollout(&next, depth + 1, rng)
        };
        let ret = reward + self.config.discount * future;
        let node = &mut self.nodes[node_id];
        node.visits += 1;
        let stat = &mut node.actions[action_idx];
        stat.visits += 1;
        stat.q += (ret - stat.q) / f64::from(stat.visits);
        ret
    }

    /// Uniform-random policy until the depth cap or all targets found.
    fn rollout<R: Rng + ?Sized>(&self, state: &MosState, depth: u32, rng: &mut R) -> f64 {
        let actions = self.pomdp.legal_actions();
        let mut value = 0.0;
        let mut weight = 1.0;
        let mut current = state.clone();
        for _ in depth..self.config.max_depth {
            if current.all_found() {
                break;
            }
            let action = actions[rng.random_range(0..actions.len())].clone();
            let (next, _, reward) = self.pomdp.step(&current, &action, rng);
            value += weight * reward;
            weight *= self.config.discount;
            current = next;
        }
        value
    }
}

impl<'a> Planner<'a> {
    pub fn new(pomdp: &'a MosPomdp, config: PlannerConfig) -> Result<Self, PlannerError> {
        config.validate()?;
        Ok(Self { pomdp, config })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    /// Runs the configured number of simulations from a fresh tree and
    /// returns the root action with the highest mean return among visited
    /// actions (fixed-order tie-break).
    pub fn plan<R: Rng + ?Sized>(
        &self,
        belief: &Belief,
        rng: &mut R,
    ) -> Result<PlanOutcome, PlannerError> {
        let sampler = belief.sampler()?;
        let mut tree = SearchTree::new(self.pomdp, &self.config);
        for _ in 0..self.config.simulations {
            let state = sampler.sample(rng);
            tree.simulate(&state, 0, 0, rng);
        }
        let actions = self.pomdp.legal_actions();
        let root = &tree.nodes[0];
        let mut best: Option<(usize, f64)> = None;
        let mut root_q = BTreeMap::new();
        let mut root_visits = BTreeMap::new();
        for (i, stat) in root.actions.iter().enumerate() {
            if stat.visits == 0 {
                continue;
            }
            root_q.insert(actions[i].clone(), stat.q);
            root_visits.insert(actions[i].clone(), stat.visits);
            if best.is_none_or(|(_, q)| stat.q > q) {
                best = Some((i, stat.q));
            }
        }
        let chosen = best.map_or(0, |(i, _)| i);
        Ok(PlanOutcome {
            action: actions[chosen].clone(),
            root_q,
            root_visits,
            simulations: self.config.simulations,
        })
    }

    /// Plans, executes the action against the true state, filters the
    /// belief, and returns the transcript. The tree is discarded; the
    /// next call starts fresh.
    pub fn step_and_replan<R: Rng + ?Sized>(
        &self,
        belief: &Belief,
        state: &MosState,
        rng: &mut R,
    ) -> Result<StepRecord, PlannerError> {
        let plan = self.plan(belief, rng)?;
        let (next_state, observation, reward) = self.pomdp.step(state, &plan.action, rng);
        let next_belief = self.pomdp.belief_update(belief, &plan.action, &observation);
        Ok(StepRecord { plan, observation, reward, next_state, next_belief })
    }
}

/// One completed step as recorded in an episode log.
#[derive(Debug, Clone)]
pub struct EpisodeStep {
    pub step: u32,
    pub action: Action,
    pub reward: f64,
    pub root_q: BTreeMap<Action, f64>,
    pub simulations: u32,
}

impl EpisodeStep {
    /// Single JSONL diagnostics line for this step.
    pub fn diagnostic_json(&self) -> String {
        let mut q = serde_json::Map::new();
        for (action, value) in &self.root_q {
            q.insert(action.to_string(), serde_json::json!(value));
        }
        serde_json::json!({
            "step": self.step,
            "action": self.action.to_string(),
            "root_q": q,
            "sims": self.simulations,
        })
        .to_string()
    }
}

/// Full episode transcript and score.
#[derive(Debug, Clone)]
pub struct EpisodeLog {
    pub steps: Vec<EpisodeStep>,
    pub discounted_reward: f64,
    pub success: bool,
    pub final_state: MosState,
    pub final_belief: Belief,
}

impl EpisodeLog {
    pub fn step_count(&self) -> u32 {
        self.steps.len() as u32
    }
}

/// Runs an episode to completion or the step cap, replanning every step
/// with a random stream seeded from the config.
pub fn run_episode(
    pomdp: &MosPomdp,
    state: MosState,
    belief: Belief,
    config: PlannerConfig,
    max_steps: u32,
) -> Result<EpisodeLog, PlannerError> {
    let planner = Planner::new(pomdp, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(planner.config().seed);
    let discount = planner.config().discount;
    let mut state = state;
    let mut belief = belief;
    let mut steps = Vec::new();
    let mut discounted_reward = 0.0;
    let mut weight = 1.0;
    while !state.all_found() && (steps.len() as u32) < max_steps {
        let record = planner.step_and_replan(&belief, &state, &mut rng)?;
        discounted_reward += weight * record.reward;
        weight *= discount;
        steps.push(EpisodeStep {
            step: steps.len() as u32,
            action: record.plan.action.clone(),
            reward: record.reward,
            root_q: record.plan.root_q,
            simulations: record.plan.simulations,
        });
        state = record.next_state;
        belief = record.next_belief;
    }
    Ok(EpisodeLog {
        success: state.all_found(),
        discounted_reward,
        steps,
        final_state: state,
        final_belief: belief,
    })
}
