//! UCT search over histories shared by POMCP and R-POMCP.
//!
//! Each node owns a fixed list of candidate macro actions chosen on first
//! visit by an [`ActionProvider`]; selection is UCB1 with unvisited candidates
//! tried first in list order. New nodes are evaluated by a random rollout or,
//! if configured, by a value heuristic.

use std::collections::HashMap;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::ParticleBelief;
use crate::error::{Error, Result};
use crate::model::{execute_macro, Budget, Environment, MacroAction, MacroObservation, PrimitiveAction, SimRng, State};
use crate::reference::ValueHeuristic;
use crate::soft::discounted_macro_reward;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UctParams {
    /// UCB1 exploration constant.
    pub c: f64,
    /// Horizon in primitive steps, counting tree descent and rollout together.
    pub rollout_depth: usize,
    pub gamma: f64,
    pub obs_resolution: f64,
}

impl Default for UctParams {
    fn default() -> Self {
        UctParams {
            c: 1.0,
            rollout_depth: 100,
            gamma: 0.99,
            obs_resolution: 1.0,
        }
    }
}

impl UctParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::InvalidParameter(format!("exploration constant must be positive, got {}", self.c)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Chooses the candidate macro actions of a node on its first visit.
pub trait ActionProvider {
    fn candidates(&self, s: &State, particles: &ParticleBelief, rng: &mut SimRng) -> Vec<MacroAction>;

    /// Whether nodes need their particle sets (R-POMCP samples from them).
    fn needs_particles(&self) -> bool {
        false
    }
}

/// Every primitive action as a length-1 macro.
pub struct PrimitiveActions(pub usize);

impl ActionProvider for PrimitiveActions {
    fn candidates(&self, _s: &State, _p: &ParticleBelief, _rng: &mut SimRng) -> Vec<MacroAction> {
        (0..self.0)
            .map(|a| MacroAction::single(PrimitiveAction(a as u16)))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct ActionStats {
    pub macro_action: MacroAction,
    pub n: u64,
    pub q: f64,
    pub children: HashMap<MacroObservation, usize>,
}

#[derive(Clone, Debug)]
pub struct UctNode {
    pub n: u64,
    pub actions: Vec<ActionStats>,
    pub particles: Option<ParticleBelief>,
    /// Number of times candidates were generated (1 once expanded).
    pub expansions: u32,
}

#[derive(Clone, Debug)]
pub struct UctTree {
    pub nodes: Vec<UctNode>,
    pub simulations: u64,
}

impl UctTree {
    pub fn root(&self) -> &UctNode {
        &self.nodes[0]
    }

    /// Visited root candidate with the highest mean return (lowest index on ties).
    pub fn best_action(&self) -> Option<&MacroAction> {
        let mut best: Option<&ActionStats> = None;
        for a in &self.root().actions {
            if a.n == 0 {
                continue;
            }
            if best.is_none_or(|b| a.q > b.q) {
                best = Some(a);
            }
        }
        best.map(|a| &a.macro_action)
    }
}

/// How newly created nodes are valued.
pub enum LeafEvaluation<'a> {
    /// Uniformly random primitive actions up to the horizon.
    Rollout,
    Heuristic(&'a dyn ValueHeuristic),
}

pub struct Uct<'a> {
    pub env: &'a dyn Environment,
    pub provider: &'a dyn ActionProvider,
    pub leaf: LeafEvaluation<'a>,
    pub params: &'a UctParams,
}

impl<'a> Uct<'a> {
    pub fn search(&self, root_belief: &ParticleBelief, budget: Budget, rng: &mut SimRng) -> Result<UctTree> {
        self.params.validate()?;
        let keep = self.provider.needs_particles();
        let mut tree = UctTree {
            nodes: vec![UctNode {
                n: 0,
                actions: Vec::new(),
                particles: keep.then(|| root_belief.clone()),
                expansions: 0,
            }],
            simulations: 0,
        };
        let start = Instant::now();
        loop {
            let done = match budget {
                Budget::Simulations(n) => tree.simulations >= n,
                Budget::Time(limit) => start.elapsed() >= limit,
            };
            if done {
                break;
            }
            let s = root_belief.sample(rng).clone();
            self.simulate(&mut tree, 0, s, 0, rng);
            tree.simulations += 1;
        }
        if tree.simulations == 0 {
            return Err(Error::PlannerStarved);
        }
        Ok(tree)
    }

    fn rollout(&self, mut s: State, depth: usize, rng: &mut SimRng) -> f64 {
        let mut total = 0.0;
        let mut discount = 1.0;
        let n = self.env.num_actions() as u16;
        for _ in depth..self.params.rollout_depth {
            if s.terminal {
                break;
            }
            let step = self.env.step(&s, PrimitiveAction(rng.random_range(0..n)), rng);
            total += discount * step.reward;
            discount *= self.params.gamma;
            s = step.state;
        }
        total
    }

    fn evaluate(&self, s: State, depth: usize, rng: &mut SimRng) -> f64 {
        match self.leaf {
            LeafEvaluation::Rollout => self.rollout(s, depth, rng),
            LeafEvaluation::Heuristic(h) => {
                if s.terminal {
                    0.0
                } else {
                    h.value(&s, rng)
                }
            }
        }
    }

    fn select(&self, node: &UctNode) -> usize {
        if let Some(i) = node.actions.iter().position(|a| a.n == 0) {
            return i;
        }
        let log_n = (node.n.max(1) as f64).ln();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, a) in node.actions.iter().enumerate() {
            let score = a.q + self.params.c * (log_n / a.n as f64).sqrt();
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        best
    }

    fn simulate(&self, tree: &mut UctTree, node: usize, s: State, depth: usize, rng: &mut SimRng) -> f64 {
        if s.terminal || depth >= self.params.rollout_depth {
            return 0.0;
        }
        if tree.nodes[node].expansions == 0 {
            let empty;
            let particles = match &tree.nodes[node].particles {
                Some(p) => p,
                None => {
                    empty = ParticleBelief::uniform(vec![s.clone()]).expect("one particle");
                    &empty
                }
            };
            let candidates = self.provider.candidates(&s, particles, rng);
            let n = &mut tree.nodes[node];
            n.expansions += 1;
            n.actions = candidates
                .into_iter()
                .map(|m| ActionStats {
                    macro_action: m,
                    n: 0,
                    q: 0.0,
                    children: HashMap::new(),
                })
                .collect();
            if node != 0 {
                let v = self.evaluate(s, depth, rng);
                tree.nodes[node].n += 1;
                return v;
            }
        }
        let i = self.select(&tree.nodes[node]);
        let macro_action = tree.nodes[node].actions[i].macro_action.clone();
        let outcome = execute_macro(self.env, &s, &macro_action, rng);
        let r = discounted_macro_reward(&outcome.rewards, self.params.gamma);
        let key = outcome.key(self.params.obs_resolution);
        let steps = macro_action.len();
        let keep = self.provider.needs_particles();
        let child = match tree.nodes[node].actions[i].children.get(&key) {
            Some(c) => *c,
            None => {
                let id = tree.nodes.len();
                tree.nodes.push(UctNode {
                    n: 0,
                    actions: Vec::new(),
                    particles: None,
                    expansions: 0,
                });
                tree.nodes[node].actions[i].children.insert(key, id);
                id
            }
        };
        if keep {
            match tree.nodes[child].particles.as_mut() {
                Some(p) => p.push(outcome.state.clone()),
                None => {
                    tree.nodes[child].particles =
                        Some(ParticleBelief::uniform(vec![outcome.state.clone()]).expect("one particle"))
                }
            }
        }
        let future = if outcome.state.terminal {
            0.0
        } else {
            self.simulate(tree, child, outcome.state, depth + steps, rng)
        };
        let total = r + self.params.gamma.powi(steps as i32) * future;
        let n = &mut tree.nodes[node];
        n.n += 1;
        let a = &mut n.actions[i];
        a.n += 1;
        a.q += (total - a.q) / a.n as f64;
        total
    }
}
