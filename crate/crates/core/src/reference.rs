//! Reference policies (macro-action samplers) and leaf value heuristics.
//!
//! A reference policy makes one attempt at producing a macro action from a
//! sampled state: pick a subgoal, plan to it with RRT-Connect and fashion the
//! path into cardinal moves. Retries and fallbacks belong to the caller so
//! every planner counts failures the same way.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::ParticleBelief;
use crate::envs::{encode_joint, EnvInstance, EnvKind, Scenario};
use crate::error::Error;
use crate::model::{rng_from_seed, MacroAction, PrimitiveAction, SimRng, State};
use crate::sbmp::{
    distance, fashion_macro_action, fashion_macro_action_in, rrt_connect, CardinalActions, Path, PlanFailure, PlannerParams, Shape, Workspace,
};
use crate::subgoals::{
    drone_subgoals, epsilon_wrap, normalized_entropy, sample_subgoal, HeuristicMode, SubgoalContext, DRONES, DRONE_DIM,
};

/// Why one sampling attempt produced no macro action.
#[derive(Clone, Debug, PartialEq)]
pub enum RefFailure {
    Subgoal(Error),
    Plan(PlanFailure),
}

/// Scratch data a reference policy may cache per belief node.
#[derive(Clone, Debug, Default)]
pub struct NodeCache {
    entropy: Option<(usize, f64)>,
}

pub trait ReferencePolicy: Send + Sync {
    /// One attempt at sampling a macro action for state `s` at a node whose
    /// particles are `belief`.
    fn try_sample(
        &self,
        s: &State,
        belief: &ParticleBelief,
        cache: &mut NodeCache,
        rng: &mut SimRng,
    ) -> Result<MacroAction, RefFailure>;

    /// Length-1 macro drawn uniformly from the primitive actions.
    fn fallback(&self, rng: &mut SimRng) -> MacroAction;

    /// False for references that never call the motion planner.
    fn uses_planner(&self) -> bool {
        true
    }
}

/// Leaf value estimate used below the depth limit.
pub trait ValueHeuristic: Send + Sync {
    fn value(&self, s: &State, rng: &mut SimRng) -> f64;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    pub mode: HeuristicMode,
    pub epsilon: f64,
    pub goal_prob: f64,
    pub grid_resolution: f64,
    pub max_macro_len: usize,
    /// Clearance kept from danger zones, in steps, whenever both endpoints
    /// of a query allow it.
    pub danger_clearance: f64,
    /// Motion-planner settings; `None` scales the defaults to the step size.
    pub planner: Option<PlannerParams>,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            mode: HeuristicMode::Uniform,
            epsilon: 0.0,
            goal_prob: 0.5,
            grid_resolution: 2.0,
            max_macro_len: 10,
            danger_clearance: 2.0,
            planner: None,
        }
    }
}

/// Entries kept before a [`PlanCache`] starts over.
const PLAN_CACHE_CAP: usize = 100_000;

/// Motion-planner queries memoized by their endpoints.
///
/// Each query runs RRT-Connect with a generator seeded from the exact
/// endpoint coordinates, so a cache hit returns what a fresh call would and
/// the result never depends on query order. Equal (state, subgoal) pairs thus
/// yield equal macro actions, which lets belief-tree edges accumulate visits
/// in lattice-valued worlds.
#[derive(Debug, Default)]
pub struct PlanCache {
    map: Mutex<HashMap<Vec<u64>, Result<Path, PlanFailure>>>,
}

impl Clone for PlanCache {
    fn clone(&self) -> Self {
        PlanCache::default()
    }
}

fn endpoint_seed(key: &[u64]) -> u64 {
    // splitmix64 folded over the coordinate bits.
    let mut h = 0x243F_6A88_85A3_08D3u64;
    for k in key {
        h ^= *k;
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}

/// The planning world with padded danger zones, and the unpadded one used
/// when a query starts or ends inside the padding.
#[derive(Clone, Debug)]
pub struct PlanningWorlds {
    pub padded: Workspace,
    pub tight: Workspace,
}

impl PlanningWorlds {
    pub fn new(scenario: &Scenario, clearance_steps: f64) -> Self {
        PlanningWorlds {
            padded: scenario.padded_planning_workspace(clearance_steps * scenario.step_size),
            tight: scenario.planning_workspace(),
        }
    }

    pub fn for_query(&self, q: &[f64], goal: &[f64]) -> &Workspace {
        if self.padded.is_valid(q) && self.padded.is_valid(goal) {
            &self.padded
        } else {
            &self.tight
        }
    }

    pub fn dim(&self) -> usize {
        self.tight.dim()
    }
}

impl PlanCache {
    pub fn plan(
        &self,
        q: &[f64],
        goal: &[f64],
        worlds: &PlanningWorlds,
        params: &PlannerParams,
    ) -> Result<Path, PlanFailure> {
        let world = worlds.for_query(q, goal);
        let key: Vec<u64> = q.iter().chain(goal).map(|x| x.to_bits()).collect();
        if let Some(hit) = self.map.lock().expect("plan cache lock").get(&key) {
            return hit.clone();
        }
        let mut rng = rng_from_seed(endpoint_seed(&key));
        let result = rrt_connect(q, goal, world, params, &mut rng);
        let mut map = self.map.lock().expect("plan cache lock");
        if map.len() >= PLAN_CACHE_CAP {
            map.clear();
        }
        map.insert(key, result.clone());
        result
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("plan cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Subgoal-driven motion-planner reference for the navigation tasks.
#[derive(Clone, Debug)]
pub struct SbmpReference {
    world: Workspace,
    worlds: PlanningWorlds,
    goals: Vec<Vec<f64>>,
    landmarks: Vec<Shape>,
    actions: CardinalActions,
    step: f64,
    config: ReferenceConfig,
    planner: PlannerParams,
    cache: PlanCache,
}

impl SbmpReference {
    pub fn new(scenario: &Scenario, config: ReferenceConfig) -> Self {
        let world = scenario.planning_workspace();
        let goals = scenario
            .goals
            .iter()
            .map(|g| g.center().to_vec())
            .filter(|c| world.is_valid(c))
            .collect();
        let planner = config
            .planner
            .clone()
            .unwrap_or_else(|| PlannerParams::for_step(scenario.step_size));
        SbmpReference {
            actions: CardinalActions::new(scenario.dim()),
            step: scenario.step_size,
            landmarks: scenario.landmarks.clone(),
            worlds: PlanningWorlds::new(scenario, config.danger_clearance),
            world,
            goals,
            config,
            planner,
            cache: PlanCache::default(),
        }
    }

    pub fn world(&self) -> &Workspace {
        &self.world
    }

    /// Closest free point of every landmark that is at least one step away.
    fn informative(&self, q: &[f64]) -> Vec<Vec<f64>> {
        self.landmarks
            .iter()
            .filter_map(|l| {
                let p = l.closest_point(q);
                let p = if self.worlds.padded.is_valid(&p) {
                    p
                } else if self.worlds.padded.is_valid(l.center()) {
                    l.center().to_vec()
                } else {
                    return None;
                };
                (distance(q, &p) >= self.step).then_some(p)
            })
            .collect()
    }

    fn entropy(&self, belief: &ParticleBelief, cache: &mut NodeCache) -> f64 {
        if let Some((n, h)) = cache.entropy {
            if n == belief.len() {
                return h;
            }
        }
        let h = normalized_entropy(belief, self.world.bounds(), self.config.grid_resolution);
        cache.entropy = Some((belief.len(), h));
        h
    }

    /// Draws a subgoal for configuration `q`.
    pub fn subgoal(
        &self,
        q: &[f64],
        belief: &ParticleBelief,
        cache: &mut NodeCache,
        rng: &mut SimRng,
    ) -> Result<Vec<f64>, Error> {
        let informative = self.informative(q);
        let entropy = match self.config.mode {
            HeuristicMode::Entropy => Some(self.entropy(belief, cache)),
            _ => None,
        };
        let ctx = SubgoalContext {
            current: q,
            goals: &self.goals,
            informative: &informative,
            belief,
            goal_prob: self.config.goal_prob,
            grid_resolution: self.config.grid_resolution,
            bounds: self.world.bounds(),
            entropy,
        };
        epsilon_wrap(
            |rng| sample_subgoal(self.config.mode, &ctx, rng),
            self.config.epsilon,
            &self.worlds.padded,
            rng,
        )
    }

    /// Deterministic in `(q, goal)`; see [`PlanCache`].
    pub fn plan(&self, q: &[f64], goal: &[f64]) -> Result<Path, PlanFailure> {
        self.cache.plan(q, goal, &self.worlds, &self.planner)
    }
}

impl ReferencePolicy for SbmpReference {
    fn try_sample(
        &self,
        s: &State,
        belief: &ParticleBelief,
        cache: &mut NodeCache,
        rng: &mut SimRng,
    ) -> Result<MacroAction, RefFailure> {
        let q = &s.values[..self.world.dim()];
        let goal = self.subgoal(q, belief, cache, rng).map_err(RefFailure::Subgoal)?;
        let path = self.plan(q, &goal).map_err(RefFailure::Plan)?;
        Ok(fashion_macro_action_in(
            &path,
            self.step,
            self.actions,
            self.config.max_macro_len,
            self.worlds.for_query(q, &goal),
        ))
    }

    fn fallback(&self, rng: &mut SimRng) -> MacroAction {
        MacroAction::single(PrimitiveAction(rng.random_range(0..self.actions.count() as u16)))
    }
}

/// Uniformly random primitive actions as length-1 macros (the Ref-Basic reference).
#[derive(Clone, Copy, Debug)]
pub struct UniformReference {
    pub num_actions: usize,
}

impl ReferencePolicy for UniformReference {
    fn try_sample(
        &self,
        _s: &State,
        _belief: &ParticleBelief,
        _cache: &mut NodeCache,
        rng: &mut SimRng,
    ) -> Result<MacroAction, RefFailure> {
        Ok(self.fallback(rng))
    }

    fn fallback(&self, rng: &mut SimRng) -> MacroAction {
        MacroAction::single(PrimitiveAction(rng.random_range(0..self.num_actions as u16)))
    }

    fn uses_planner(&self) -> bool {
        false
    }
}

/// Joint reference for the tag task: the drone nearest a sampled target
/// chases it, the others spread out; per-drone plans are zipped into joint
/// actions.
#[derive(Clone, Debug)]
pub struct DroneReference {
    world: Workspace,
    worlds: PlanningWorlds,
    step: f64,
    max_macro_len: usize,
    planner: PlannerParams,
    cache: PlanCache,
}

impl DroneReference {
    pub fn new(scenario: &Scenario, config: &ReferenceConfig) -> Self {
        DroneReference {
            world: scenario.planning_workspace(),
            worlds: PlanningWorlds::new(scenario, config.danger_clearance),
            step: scenario.step_size,
            max_macro_len: config.max_macro_len,
            planner: config
                .planner
                .clone()
                .unwrap_or_else(|| PlannerParams::for_step(scenario.step_size)),
            cache: PlanCache::default(),
        }
    }
}

/// Pads `moves` to `len` by stepping back and forth around its end point.
fn hover_pad(moves: &mut Vec<PrimitiveAction>, len: usize, actions: CardinalActions) {
    let last = *moves.last().expect("fashioned macros are nonempty");
    let (axis, sign) = actions.direction(last);
    let back = actions.action(axis, sign < 0.0);
    let mut next_back = true;
    while moves.len() < len {
        moves.push(if next_back { back } else { last });
        next_back = !next_back;
    }
}

impl ReferencePolicy for DroneReference {
    fn try_sample(
        &self,
        s: &State,
        belief: &ParticleBelief,
        _cache: &mut NodeCache,
        rng: &mut SimRng,
    ) -> Result<MacroAction, RefFailure> {
        let goals = drone_subgoals(belief, &self.world, rng).map_err(RefFailure::Subgoal)?;
        let actions = CardinalActions::new(DRONE_DIM);
        let mut per_drone = Vec::with_capacity(DRONES);
        for (i, goal) in goals.iter().enumerate() {
            let q = &s.values[i * DRONE_DIM..(i + 1) * DRONE_DIM];
            let path = self.cache.plan(q, goal, &self.worlds, &self.planner).map_err(RefFailure::Plan)?;
            per_drone.push(
                fashion_macro_action_in(&path, self.step, actions, self.max_macro_len, self.worlds.for_query(q, goal))
                    .actions()
                    .to_vec(),
            );
        }
        let len = per_drone.iter().map(|m| m.len()).max().unwrap_or(1);
        for m in per_drone.iter_mut() {
            hover_pad(m, len, actions);
        }
        let joint = (0..len)
            .map(|t| {
                let moves: Vec<PrimitiveAction> = per_drone.iter().map(|m| m[t]).collect();
                encode_joint(&moves)
            })
            .collect();
        Ok(MacroAction::new(joint).expect("nonempty"))
    }

    fn fallback(&self, rng: &mut SimRng) -> MacroAction {
        MacroAction::single(PrimitiveAction(rng.random_range(0..6u16.pow(DRONES as u32))))
    }
}

/// Zero everywhere (used for the tag task).
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroHeuristic;

impl ValueHeuristic for ZeroHeuristic {
    fn value(&self, _s: &State, _rng: &mut SimRng) -> f64 {
        0.0
    }
}

/// Discounted return of walking the fashioned motion-planner path to the
/// nearest goal: `γ^L·R_goal + Σ_{i<L} γ^i·R_step`, or 0 when planning fails.
#[derive(Clone, Debug)]
pub struct GoalPathHeuristic {
    worlds: PlanningWorlds,
    goals: Vec<Shape>,
    actions: CardinalActions,
    step: f64,
    gamma: f64,
    goal_reward: f64,
    step_reward: f64,
    planner: PlannerParams,
    cache: PlanCache,
}

impl GoalPathHeuristic {
    /// `clearance` is the danger padding in steps, as in [`ReferenceConfig`].
    pub fn new(scenario: &Scenario, gamma: f64, planner: Option<PlannerParams>, clearance: f64) -> Self {
        GoalPathHeuristic {
            worlds: PlanningWorlds::new(scenario, clearance),
            goals: scenario.goals.clone(),
            actions: CardinalActions::new(scenario.dim()),
            step: scenario.step_size,
            gamma,
            goal_reward: scenario.rewards.goal,
            step_reward: scenario.rewards.step,
            planner: planner.unwrap_or_else(|| PlannerParams::for_step(scenario.step_size)),
            cache: PlanCache::default(),
        }
    }

    /// Return of reaching the goal after `len` steps.
    pub fn value_at_length(&self, len: usize) -> f64 {
        let gl = self.gamma.powi(len as i32);
        gl * self.goal_reward + self.step_reward * (1.0 - gl) / (1.0 - self.gamma)
    }
}

impl ValueHeuristic for GoalPathHeuristic {
    fn value(&self, s: &State, _rng: &mut SimRng) -> f64 {
        if s.terminal {
            return 0.0;
        }
        let q = &s.values[..self.worlds.dim()];
        if self.goals.iter().any(|g| g.contains(q)) {
            return self.goal_reward;
        }
        let Some(goal) = self
            .goals
            .iter()
            .map(|g| g.center())
            .min_by(|a, b| distance(q, a).total_cmp(&distance(q, b)))
        else {
            return 0.0;
        };
        match self.cache.plan(q, goal, &self.worlds, &self.planner) {
            Ok(path) => {
                let m = fashion_macro_action(&path, self.step, self.actions, usize::MAX);
                self.value_at_length(m.len())
            }
            Err(_) => 0.0,
        }
    }
}

/// Reference policy for `env`: planner-driven, or uniform primitives when `basic`.
pub fn build_reference(env: &EnvInstance, config: &ReferenceConfig, basic: bool) -> Box<dyn ReferencePolicy> {
    use crate::model::Environment;
    if basic {
        return Box::new(UniformReference {
            num_actions: env.num_actions(),
        });
    }
    match env.kind() {
        EnvKind::DroneTag => Box::new(DroneReference::new(env.scenario(), config)),
        _ => Box::new(SbmpReference::new(env.scenario(), config.clone())),
    }
}

/// Leaf heuristic for `env`: the goal-path return for navigation tasks, zero for tag.
pub fn build_heuristic(env: &EnvInstance, gamma: f64, config: &ReferenceConfig) -> Box<dyn ValueHeuristic> {
    match env.kind() {
        EnvKind::DroneTag => Box::new(ZeroHeuristic),
        _ => Box::new(GoalPathHeuristic::new(env.scenario(), gamma, config.planner.clone(), config.danger_clearance)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::lightdark_scenario_with;
    use crate::model::rng_from_seed;

    #[test]
    fn straight_line_heuristic_value() {
        // Ten half-unit steps east to an 800-reward goal.
        let mut sc = lightdark_scenario_with([0.25, 0.25], [5.25, 0.25], 0.25);
        sc.rewards.goal = 800.0;
        let h = GoalPathHeuristic::new(&sc, 0.99, None, 0.0);
        let mut rng = rng_from_seed(0);
        let v = h.value(&State::new(vec![0.25, 0.25]), &mut rng);
        assert!((v - 722.5494807571315).abs() < 1e-9);
    }

    #[test]
    fn heuristic_in_goal_is_goal_reward() {
        let sc = lightdark_scenario_with([0.25, 0.25], [7.0, 7.0], 0.25);
        let h = GoalPathHeuristic::new(&sc, 0.99, None, 0.0);
        let mut rng = rng_from_seed(0);
        assert_eq!(h.value(&State::new(vec![7.0, 7.0]), &mut rng), 100.0);
    }

    #[test]
    fn hover_padding_alternates() {
        let a = CardinalActions::new(3);
        let mut m = vec![crate::sbmp::EAST];
        hover_pad(&mut m, 4, a);
        assert_eq!(m, vec![crate::sbmp::EAST, crate::sbmp::WEST, crate::sbmp::EAST, crate::sbmp::WEST]);
    }
}
