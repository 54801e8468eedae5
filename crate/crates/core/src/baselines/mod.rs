//! Comparison planners: POMCP over primitives, R-POMCP over frozen per-node
//! macro sets, and the plan-free B-VAMP policy. Ref-Basic is a refsolver
//! configuration (see [`crate::reference::UniformReference`]).

mod uct;

pub use uct::{ActionProvider, ActionStats, LeafEvaluation, PrimitiveActions, Uct, UctNode, UctParams, UctTree};

use rand::Rng;

use crate::belief::ParticleBelief;
use crate::error::{Error, Result};
use crate::model::{Budget, Environment, MacroAction, PrimitiveAction, SimRng, State};
use crate::reference::{NodeCache, ReferencePolicy};

pub const DEFAULT_K: usize = 8;

/// Exploration constant scaled to the reward range of an environment.
pub fn reward_span(goal: f64, danger: f64, step: f64) -> f64 {
    let hi = goal.max(step).max(0.0);
    let lo = danger.min(step).min(0.0);
    (hi - lo).max(f64::MIN_POSITIVE)
}

fn random_primitive(env: &dyn Environment, rng: &mut SimRng) -> PrimitiveAction {
    PrimitiveAction(rng.random_range(0..env.num_actions() as u16))
}

/// POMCP search returning the whole tree.
pub fn pomcp_search(
    root_belief: &ParticleBelief,
    env: &dyn Environment,
    params: &UctParams,
    budget: Budget,
    rng: &mut SimRng,
) -> Result<UctTree> {
    if root_belief.is_empty() {
        return Err(Error::Domain("empty root belief".into()));
    }
    let provider = PrimitiveActions(env.num_actions());
    Uct {
        env,
        provider: &provider,
        leaf: LeafEvaluation::Rollout,
        params,
    }
    .search(root_belief, budget, rng)
}

/// Best root primitive by mean return; a uniformly random one if the budget
/// allowed no simulation.
pub fn pomcp_plan(
    root_belief: &ParticleBelief,
    env: &dyn Environment,
    params: &UctParams,
    budget: Budget,
    rng: &mut SimRng,
) -> Result<PrimitiveAction> {
    match pomcp_search(root_belief, env, params, budget, rng) {
        Ok(tree) => Ok(tree
            .best_action()
            .map(|m| m.actions()[0])
            .unwrap_or_else(|| random_primitive(env, rng))),
        Err(Error::PlannerStarved) => Ok(random_primitive(env, rng)),
        Err(e) => Err(e),
    }
}

/// `K` macros from one sampled state, each with up to `retries` reference
/// attempts before falling back to a random length-1 macro.
pub struct FrozenMacros<'a> {
    pub reference: &'a dyn ReferencePolicy,
    pub k: usize,
    pub retries: usize,
    pub max_macro_len: usize,
}

impl ActionProvider for FrozenMacros<'_> {
    fn candidates(&self, s: &State, particles: &ParticleBelief, rng: &mut SimRng) -> Vec<MacroAction> {
        let mut cache = NodeCache::default();
        let attempts = if self.reference.uses_planner() {
            self.retries.max(1)
        } else {
            1
        };
        (0..self.k)
            .map(|_| {
                for _ in 0..attempts {
                    if let Ok(m) = self.reference.try_sample(s, particles, &mut cache, rng) {
                        return m.truncated(self.max_macro_len);
                    }
                }
                self.reference.fallback(rng)
            })
            .collect()
    }

    fn needs_particles(&self) -> bool {
        true
    }
}

pub fn rpomcp_search(
    root_belief: &ParticleBelief,
    env: &dyn Environment,
    macros: &FrozenMacros<'_>,
    leaf: LeafEvaluation<'_>,
    params: &UctParams,
    budget: Budget,
    rng: &mut SimRng,
) -> Result<UctTree> {
    if root_belief.is_empty() {
        return Err(Error::Domain("empty root belief".into()));
    }
    if macros.k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    Uct {
        env,
        provider: macros,
        leaf,
        params,
    }
    .search(root_belief, budget, rng)
}

/// Best root macro of an R-POMCP search; a random length-1 macro on starvation.
pub fn rpomcp_plan(
    root_belief: &ParticleBelief,
    env: &dyn Environment,
    macros: &FrozenMacros<'_>,
    leaf: LeafEvaluation<'_>,
    params: &UctParams,
    budget: Budget,
    rng: &mut SimRng,
) -> Result<MacroAction> {
    match rpomcp_search(root_belief, env, macros, leaf, params, budget, rng) {
        Ok(tree) => Ok(tree
            .best_action()
            .cloned()
            .unwrap_or_else(|| macros.reference.fallback(rng))),
        Err(Error::PlannerStarved) => Ok(macros.reference.fallback(rng)),
        Err(e) => Err(e),
    }
}

/// Macro from the reference at one state drawn from `belief`, no search.
pub fn bvamp_step(
    belief: &ParticleBelief,
    reference: &dyn ReferencePolicy,
    retries: usize,
    max_macro_len: usize,
    rng: &mut SimRng,
) -> Result<MacroAction> {
    if belief.is_empty() {
        return Err(Error::Domain("empty belief".into()));
    }
    let s = belief.sample(rng).clone();
    let mut cache = NodeCache::default();
    for _ in 0..retries.max(1) {
        if let Ok(m) = reference.try_sample(&s, belief, &mut cache, rng) {
            return Ok(m.truncated(max_macro_len));
        }
    }
    Ok(reference.fallback(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rng_from_seed, Observation, Step, StepEvent};

    /// Two arms, one step, reward = arm index; no observations.
    struct Bandit;

    impl Environment for Bandit {
        fn name(&self) -> &str {
            "bandit"
        }
        fn state_dim(&self) -> usize {
            1
        }
        fn num_actions(&self) -> usize {
            2
        }
        fn step(&self, s: &State, a: PrimitiveAction, _rng: &mut SimRng) -> Step {
            if s.terminal {
                return Step::absorbed(s);
            }
            let mut next = s.clone();
            next.terminal = true;
            Step {
                state: next,
                observation: Observation::Terminal,
                reward: a.0 as f64,
                event: StepEvent::Success,
            }
        }
        fn observation_log_likelihood(&self, _o: &Observation, _s: &State, _a: PrimitiveAction) -> f64 {
            0.0
        }
        fn sample_initial_state(&self, _rng: &mut SimRng) -> State {
            State::new(vec![0.0])
        }
        fn initial_belief(&self, n: usize, _rng: &mut SimRng) -> ParticleBelief {
            ParticleBelief::point_mass(State::new(vec![0.0]), n)
        }
    }

    #[test]
    fn bandit_picks_better_arm() {
        let b = ParticleBelief::point_mass(State::new(vec![0.0]), 10);
        let params = UctParams {
            c: 1.0,
            ..UctParams::default()
        };
        let mut rng = rng_from_seed(3);
        let tree = pomcp_search(&b, &Bandit, &params, Budget::Simulations(1000), &mut rng).unwrap();
        assert_eq!(tree.best_action().unwrap().actions()[0], PrimitiveAction(1));
        assert!(tree.root().actions[1].n > tree.root().actions[0].n);
    }

    #[test]
    fn starved_budget_gives_random_action() {
        let b = ParticleBelief::point_mass(State::new(vec![0.0]), 10);
        let mut rng = rng_from_seed(3);
        let a = pomcp_plan(&b, &Bandit, &UctParams::default(), Budget::Simulations(0), &mut rng).unwrap();
        assert!(a.0 < 2);
    }

    #[test]
    fn reward_span_covers_extremes() {
        assert_eq!(reward_span(800.0, -800.0, -0.1), 1600.0);
        assert_eq!(reward_span(100.0, 0.0, -0.1), 100.1);
    }
}
