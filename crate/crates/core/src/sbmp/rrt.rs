//! Bidirectional RRT (RRT-Connect) with shortcut simplification.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::motion::{validate_motion, PlannerParams};
use super::workspace::Workspace;
use crate::model::SimRng;

/// A piecewise-linear collision-free path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub waypoints: Vec<Vec<f64>>,
}

impl Path {
    pub fn new(waypoints: Vec<Vec<f64>>) -> Self {
        Path { waypoints }
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn start(&self) -> &[f64] {
        &self.waypoints[0]
    }

    pub fn end(&self) -> &[f64] {
        &self.waypoints[self.waypoints.len() - 1]
    }

    /// Total Euclidean length.
    pub fn length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| distance(&w[0], &w[1]))
            .sum()
    }
}

/// Why a planning query produced no path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanFailure {
    InvalidStart,
    InvalidGoal,
    /// Iteration or time budget exhausted.
    Timeout,
}

impl std::fmt::Display for PlanFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlanFailure::InvalidStart => write!(f, "start configuration is not free"),
            PlanFailure::InvalidGoal => write!(f, "goal configuration is not free"),
            PlanFailure::Timeout => write!(f, "planning budget exhausted"),
        }
    }
}

impl std::error::Error for PlanFailure {}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

struct Tree {
    dim: usize,
    coords: Vec<f64>,
    parent: Vec<u32>,
}

enum Extend {
    Trapped,
    Advanced(usize),
    Reached(usize),
}

impl Tree {
    fn new(root: &[f64]) -> Self {
        Tree {
            dim: root.len(),
            coords: root.to_vec(),
            parent: vec![u32::MAX],
        }
    }

    fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn len(&self) -> usize {
        self.parent.len()
    }

    fn nearest(&self, q: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, node) in self.coords.chunks_exact(self.dim).enumerate() {
            let mut d = 0.0;
            for k in 0..self.dim {
                let t = node[k] - q[k];
                d += t * t;
            }
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    fn push(&mut self, q: &[f64], parent: usize) -> usize {
        self.coords.extend_from_slice(q);
        self.parent.push(parent as u32);
        self.len() - 1
    }

    fn extend(&mut self, q: &[f64], world: &Workspace, params: &PlannerParams) -> Extend {
        let near = self.nearest(q);
        let from = self.node(near).to_vec();
        let d = distance(&from, q);
        let (target, reached) = if d <= params.step_extend {
            (q.to_vec(), true)
        } else {
            let s = params.step_extend / d;
            (
                from.iter().zip(q).map(|(a, b)| a + (b - a) * s).collect(),
                false,
            )
        };
        if !motion_ok(&from, &target, world, params) {
            return Extend::Trapped;
        }
        let id = self.push(&target, near);
        if reached {
            Extend::Reached(id)
        } else {
            Extend::Advanced(id)
        }
    }

    fn connect(&mut self, q: &[f64], world: &Workspace, params: &PlannerParams) -> Extend {
        loop {
            match self.extend(q, world, params) {
                Extend::Advanced(_) => continue,
                other => return other,
            }
        }
    }

    /// Waypoints from the root to node `i`.
    fn branch(&self, mut i: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        loop {
            out.push(self.node(i).to_vec());
            let p = self.parent[i];
            if p == u32::MAX {
                break;
            }
            i = p as usize;
        }
        out.reverse();
        out
    }
}

/// Sampled batched check plus an exact sweep, so accepted edges stay valid
/// under any finer resampling.
fn motion_ok(q0: &[f64], q1: &[f64], world: &Workspace, params: &PlannerParams) -> bool {
    validate_motion(q0, q1, world, params) && world.segment_clear(q0, q1)
}

fn sample_uniform(world: &Workspace, rng: &mut SimRng) -> Vec<f64> {
    let b = world.bounds();
    (0..world.dim())
        .map(|d| {
            if b.hi[d] > b.lo[d] {
                rng.random_range(b.lo[d]..=b.hi[d])
            } else {
                b.lo[d]
            }
        })
        .collect()
}

/// Plans a collision-free path from `start` to `goal` and simplifies it.
///
/// Iteration-bounded when `params.time_limit` is `None`, in which case the
/// result is a deterministic function of the generator state.
pub fn rrt_connect(
    start: &[f64],
    goal: &[f64],
    world: &Workspace,
    params: &PlannerParams,
    rng: &mut SimRng,
) -> Result<Path, PlanFailure> {
    if start.len() != world.dim() || !world.is_valid(start) {
        return Err(PlanFailure::InvalidStart);
    }
    if goal.len() != world.dim() || !world.is_valid(goal) {
        return Err(PlanFailure::InvalidGoal);
    }
    if start == goal {
        return Ok(Path::new(vec![start.to_vec()]));
    }
    if motion_ok(start, goal, world, params) {
        return Ok(Path::new(vec![start.to_vec(), goal.to_vec()]));
    }

    let started = params.time_limit.map(|limit| (Instant::now(), limit));
    let mut a = Tree::new(start);
    let mut b = Tree::new(goal);
    let mut a_is_start = true;
    for iter in 0..params.max_iterations {
        if let Some((t0, limit)) = started {
            if iter % 32 == 0 && t0.elapsed() > limit {
                return Err(PlanFailure::Timeout);
            }
        }
        let q_rand = sample_uniform(world, rng);
        let new_id = match a.extend(&q_rand, world, params) {
            Extend::Trapped => None,
            Extend::Advanced(id) | Extend::Reached(id) => Some(id),
        };
        if let Some(new_id) = new_id {
            let q_new = a.node(new_id).to_vec();
            if let Extend::Reached(b_id) = b.connect(&q_new, world, params) {
                let mut from_a = a.branch(new_id);
                let mut from_b = b.branch(b_id);
                // The connecting node appears at the end of both branches.
                from_b.pop();
                from_b.reverse();
                from_a.extend(from_b);
                if !a_is_start {
                    from_a.reverse();
                }
                let raw = Path::new(from_a);
                return Ok(simplify_path(&raw, world, params, rng));
            }
        }
        std::mem::swap(&mut a, &mut b);
        a_is_start = !a_is_start;
    }
    Err(PlanFailure::Timeout)
}

/// Random shortcutting for `simplify_rounds` rounds followed by greedy removal
/// of redundant waypoints. Endpoints are preserved and length never grows.
pub fn simplify_path(path: &Path, world: &Workspace, params: &PlannerParams, rng: &mut SimRng) -> Path {
    let mut pts = path.waypoints.clone();
    for _ in 0..params.simplify_rounds {
        if pts.len() <= 2 {
            break;
        }
        let i = rng.random_range(0..pts.len() - 2);
        let j = rng.random_range(i + 2..pts.len());
        if motion_ok(&pts[i], &pts[j], world, params) {
            pts.drain(i + 1..j);
        }
    }
    if pts.len() > 2 {
        let mut kept = vec![pts[0].clone()];
        for k in 1..pts.len() - 1 {
            let last = kept.last().expect("nonempty");
            if !motion_ok(last, &pts[k + 1], world, params) {
                kept.push(pts[k].clone());
            }
        }
        kept.push(pts[pts.len() - 1].clone());
        pts = kept;
    }
    Path::new(pts)
}
