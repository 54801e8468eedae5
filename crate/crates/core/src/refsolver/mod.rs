//! The reference-based belief-tree planner.
//!
//! Each simulation samples a state at the current node, draws a macro action
//! from the reference policy, executes it through the generative model and
//! recurses into the resulting `hāō` node. On the way back the soft-Bellman
//! statistics are maintained incrementally: `W(h)` is the empirical mean of
//! `exp(η·[R̂ + γ^{|ā|}·D̂])` over sampled macros and `V(h) = log W(h) / η`.
//! Below the depth limit the value heuristic stands in for the subtree.

mod oracle;
mod tree;

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use oracle::{compare_with_recompute, recompute, RecomputeReport, Recomputed};
pub use tree::{Edge, EdgeId, Node, NodeId, Recorder, SearchTree, TreeStats, ROOT};

use crate::belief::ParticleBelief;
use crate::error::{Error, Result};
use crate::model::{execute_macro, Budget, Environment, MacroAction, SimRng, SolverParams, State};
use crate::reference::{ReferencePolicy, ValueHeuristic};
use crate::soft::discounted_macro_reward;

/// Cancellation guard: when an incremental subtraction keeps less than this
/// fraction of its operands' magnitude, the statistic is rebuilt from children.
const CANCELLATION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub params: SolverParams,
    /// Draw the root action from the empirical soft policy instead of taking its mode.
    pub sample_root_action: bool,
    /// Keep the realized subtree between planning cycles.
    pub subtree_reuse: bool,
    /// Reference attempts per simulation before falling back to a random primitive.
    pub sbmp_retries: usize,
    /// Record raw samples for the recompute oracle.
    pub record: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            params: SolverParams::default(),
            sample_root_action: false,
            subtree_reuse: false,
            sbmp_retries: 3,
            record: false,
        }
    }
}

/// A configured planner borrowing its model components.
pub struct Planner<'a> {
    pub env: &'a dyn Environment,
    pub reference: &'a dyn ReferencePolicy,
    pub heuristic: &'a dyn ValueHeuristic,
    pub config: &'a SolverConfig,
}

impl<'a> Planner<'a> {
    pub fn new(
        env: &'a dyn Environment,
        reference: &'a dyn ReferencePolicy,
        heuristic: &'a dyn ValueHeuristic,
        config: &'a SolverConfig,
    ) -> Self {
        Planner {
            env,
            reference,
            heuristic,
            config,
        }
    }

    fn params(&self) -> &SolverParams {
        &self.config.params
    }

    /// Builds a fresh tree at `root_belief` and searches it under the configured budget.
    pub fn plan(&self, root_belief: &ParticleBelief, rng: &mut SimRng) -> Result<SearchTree> {
        self.params().validate()?;
        let tree = SearchTree::new(root_belief.clone(), self.params().clone(), self.config.record);
        self.search(tree, self.params().budget, rng)
    }

    /// Continues searching `tree` for `budget`.
    pub fn search(&self, mut tree: SearchTree, budget: Budget, rng: &mut SimRng) -> Result<SearchTree> {
        let start = Instant::now();
        let before = tree.stats.simulations;
        loop {
            let done = match budget {
                Budget::Simulations(n) => tree.stats.simulations - before >= n,
                Budget::Time(limit) => start.elapsed() >= limit,
            };
            if done {
                break;
            }
            self.simulate(&mut tree, ROOT, rng);
            tree.stats.simulations += 1;
        }
        if tree.stats.simulations == 0 {
            return Err(Error::PlannerStarved);
        }
        Ok(tree)
    }

    /// SampleMacroActionSBMP with retries; falls back to a random primitive.
    fn sample_macro(&self, tree: &mut SearchTree, node: NodeId, s: &State, rng: &mut SimRng) -> MacroAction {
        let attempts = if self.reference.uses_planner() {
            self.config.sbmp_retries.max(1)
        } else {
            1
        };
        for _ in 0..attempts {
            if self.reference.uses_planner() {
                tree.stats.sbmp_calls += 1;
            }
            let n = &mut tree.nodes[node];
            match self.reference.try_sample(s, &n.particles, &mut n.cache, rng) {
                Ok(m) => return m.truncated(self.params().max_macro_len),
                Err(_) => tree.stats.sbmp_failures += 1,
            }
        }
        tree.stats.fallbacks += 1;
        self.reference.fallback(rng)
    }

    /// One simulation from `node`; returns the value it backed up.
    pub fn simulate(&self, tree: &mut SearchTree, node: NodeId, rng: &mut SimRng) -> f64 {
        let eta = self.params().eta;
        let gamma = self.params().gamma;
        let s = tree.nodes[node].particles.sample(rng).clone();

        if tree.nodes[node].depth > self.params().max_depth {
            let v = if s.terminal { 0.0 } else { self.heuristic.value(&s, rng) };
            let n = &mut tree.nodes[node];
            n.n += 1;
            n.v += (v - n.v) / n.n as f64;
            n.w = (eta * n.v).exp();
            if let Some(rec) = tree.recorder.as_mut() {
                rec.leaf_values.entry(node).or_default().push(v);
            }
            return v;
        }

        if s.terminal {
            let n = &mut tree.nodes[node];
            let total = n.n as f64 * n.w + 1.0;
            n.n += 1;
            n.absorbed += 1;
            n.w = total / n.n as f64;
            if let Some(rec) = tree.recorder.as_mut() {
                *rec.absorbed.entry(node).or_default() += 1;
            }
            let n = &mut tree.nodes[node];
            if n.w.is_finite() && n.w > 0.0 {
                n.v = n.w.ln() / eta;
            } else {
                self.recompute_w(tree, node);
            }
            return tree.nodes[node].v;
        }

        let macro_action = self.sample_macro(tree, node, &s, rng);
        let outcome = execute_macro(self.env, &s, &macro_action, rng);
        let r = discounted_macro_reward(&outcome.rewards, gamma);
        let key = outcome.key(self.params().obs_resolution);
        let edge = tree.edge_for(node, &macro_action);
        let child = tree.child_for(edge, key, outcome.state);
        if let Some(rec) = tree.recorder.as_mut() {
            rec.edge_rewards.entry(edge).or_default().push(r);
        }

        // Stale contributions, captured before the child changes.
        let (n_h, w_h) = (tree.nodes[node].n as f64, tree.nodes[node].w);
        let e = &tree.edges[edge];
        let (n_e, d_e) = (e.n as f64, e.d_hat);
        let old_term = if e.n > 0 { n_e * (eta * e.q(gamma)).exp() } else { 0.0 };
        let (n_c, v_c) = (tree.nodes[child].n as f64, tree.nodes[child].v);
        let total_h = n_h * w_h;
        let w_stale = total_h - old_term;
        let p = n_e * d_e - n_c * v_c;
        let p_cancelled = cancelled(p, n_e * d_e, n_c * v_c);
        let w_cancelled = cancelled(w_stale, total_h, old_term) || w_stale < 0.0;

        self.simulate(tree, child, rng);

        // MaintainExpectation.
        let (n_c, v_c) = (tree.nodes[child].n as f64, tree.nodes[child].v);
        let e = &mut tree.edges[edge];
        e.n += 1;
        let n_e = e.n as f64;
        e.r_hat += (r - e.r_hat) / n_e;
        e.d_hat = (p + n_c * v_c) / n_e;
        if p_cancelled {
            self.recompute_d(tree, edge);
        }
        let e = &tree.edges[edge];
        let new_term = n_e * (eta * e.q(gamma)).exp();
        let n = &mut tree.nodes[node];
        n.n += 1;
        n.w = (w_stale + new_term) / n.n as f64;
        if w_cancelled || !(n.w.is_finite() && n.w > 0.0) {
            self.recompute_w(tree, node);
        } else {
            n.v = n.w.ln() / eta;
        }
        tree.nodes[node].v
    }

    /// Rebuilds `D̂(hā)` from its children.
    fn recompute_d(&self, tree: &mut SearchTree, edge: EdgeId) {
        tree.stats.guard_recomputes += 1;
        let e = &tree.edges[edge];
        let sum: f64 = e
            .children
            .iter()
            .map(|c| tree.nodes[*c].n as f64 * tree.nodes[*c].v)
            .sum();
        let d = sum / e.n as f64;
        tree.edges[edge].d_hat = d;
    }

    /// Rebuilds `W(h)` and `V(h)` from its edges in max-shifted space. `V` is
    /// taken from the shifted logarithm so it stays exact even when `W`
    /// itself leaves the floating-point range.
    fn recompute_w(&self, tree: &mut SearchTree, node: NodeId) {
        tree.stats.guard_recomputes += 1;
        let eta = self.params().eta;
        let gamma = self.params().gamma;
        let n = &tree.nodes[node];
        let mut weights: Vec<f64> = n.edges.iter().map(|e| tree.edges[*e].n as f64).collect();
        let mut exps: Vec<f64> = n.edges.iter().map(|e| eta * tree.edges[*e].q(gamma)).collect();
        weights.push(n.absorbed as f64);
        exps.push(0.0);
        let log_w = crate::soft::weighted_log_sum_exp(&weights, &exps) - (n.n as f64).ln();
        let n = &mut tree.nodes[node];
        n.w = log_w.exp().clamp(f64::MIN_POSITIVE, f64::MAX);
        n.v = log_w / eta;
    }
}

fn cancelled(diff: f64, a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs());
    scale > 0.0 && diff.abs() < CANCELLATION * scale
}

/// Mode of the empirical soft policy at the root: the edge maximizing
/// `N(hā)·exp(η·[R̂ + γ^{|ā|}·D̂])`, ties to higher `N`, then lower ordinal.
pub fn select_root_action(tree: &SearchTree) -> Result<MacroAction> {
    let eta = tree.params.eta;
    let gamma = tree.params.gamma;
    let mut best: Option<(&Edge, f64)> = None;
    for e in tree.root_edges() {
        if e.n == 0 {
            continue;
        }
        let score = (e.n as f64).ln() + eta * e.q(gamma);
        let better = match best {
            None => true,
            Some((b, bs)) => score > bs || (score == bs && (e.n > b.n || (e.n == b.n && e.ordinal < b.ordinal))),
        };
        if better {
            best = Some((e, score));
        }
    }
    best.map(|(e, _)| e.macro_action.clone()).ok_or(Error::NoRootActions)
}

/// Draws a root action from the empirical soft policy `∝ N(hā)·exp(η·q)`.
pub fn sample_root_action(tree: &SearchTree, rng: &mut SimRng) -> Result<MacroAction> {
    let eta = tree.params.eta;
    let gamma = tree.params.gamma;
    let edges: Vec<&Edge> = tree.root_edges().filter(|e| e.n > 0).collect();
    if edges.is_empty() {
        return Err(Error::NoRootActions);
    }
    let logits: Vec<f64> = edges.iter().map(|e| (e.n as f64).ln() + eta * e.q(gamma)).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (e, w) in edges.iter().zip(&weights) {
        if u < *w {
            return Ok(e.macro_action.clone());
        }
        u -= w;
    }
    Ok(edges[edges.len() - 1].macro_action.clone())
}

/// Root action according to the configured selection rule.
pub fn choose_root_action(tree: &SearchTree, config: &SolverConfig, rng: &mut SimRng) -> Result<MacroAction> {
    if config.sample_root_action {
        sample_root_action(tree, rng)
    } else {
        select_root_action(tree)
    }
}

/// Plans from `root_belief` with a fresh tree.
pub fn plan(
    root_belief: &ParticleBelief,
    env: &dyn Environment,
    reference: &dyn ReferencePolicy,
    heuristic: &dyn ValueHeuristic,
    config: &SolverConfig,
    rng: &mut SimRng,
) -> Result<SearchTree> {
    Planner::new(env, reference, heuristic, config).plan(root_belief, rng)
}
