//! Subgoal heuristics that choose where the motion planner should head.
//!
//! Three rules pick between goal configurations and informative (landmark)
//! configurations: `Uniform`, `Distance` (inverse-distance weighting of
//! informative states) and `Entropy` (goal probability `1 − H` for the
//! normalized belief entropy `H`). [`epsilon_wrap`] mixes in uniformly sampled
//! free configurations, and [`drone_subgoals`] is the joint rule used for the
//! multi-drone tag task.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::ParticleBelief;
use crate::error::{Error, Result};
use crate::model::SimRng;
use crate::sbmp::{distance, Bounds, Workspace};

/// Regularizer added to landmark distances.
pub const DISTANCE_EPS: f64 = 1e-3;

const MAX_REJECTIONS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicMode {
    Uniform,
    Distance,
    Entropy,
}

impl std::str::FromStr for HeuristicMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(HeuristicMode::Uniform),
            "distance" => Ok(HeuristicMode::Distance),
            "entropy" => Ok(HeuristicMode::Entropy),
            other => Err(Error::InvalidParameter(format!("unknown heuristic '{other}'"))),
        }
    }
}

impl std::fmt::Display for HeuristicMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            HeuristicMode::Uniform => "uniform",
            HeuristicMode::Distance => "distance",
            HeuristicMode::Entropy => "entropy",
        };
        f.write_str(s)
    }
}

/// Inputs to one subgoal draw.
#[derive(Clone, Debug)]
pub struct SubgoalContext<'a> {
    pub current: &'a [f64],
    pub goals: &'a [Vec<f64>],
    pub informative: &'a [Vec<f64>],
    pub belief: &'a ParticleBelief,
    pub goal_prob: f64,
    pub grid_resolution: f64,
    pub bounds: &'a Bounds,
    /// Precomputed normalized entropy of `belief`, if the caller has it cached.
    pub entropy: Option<f64>,
}

/// Shannon entropy of the particles' grid histogram divided by `log(#cells)`
/// over the full bounded grid. Only the first `bounds.dim()` state
/// coordinates are histogrammed.
pub fn normalized_entropy(belief: &ParticleBelief, bounds: &Bounds, grid_resolution: f64) -> f64 {
    let dim = bounds.dim();
    let cells_per_dim: Vec<usize> = (0..dim)
        .map(|d| ((bounds.extent(d) / grid_resolution).ceil() as usize).max(1))
        .collect();
    let total_cells: f64 = cells_per_dim.iter().map(|c| *c as f64).product();
    if total_cells <= 1.0 {
        return 0.0;
    }
    let mut hist: HashMap<Vec<usize>, f64> = HashMap::new();
    for (s, w) in belief.iter() {
        let cell: Vec<usize> = (0..dim)
            .map(|d| {
                let idx = ((s.values[d] - bounds.lo[d]) / grid_resolution).floor();
                (idx.max(0.0) as usize).min(cells_per_dim[d] - 1)
            })
            .collect();
        *hist.entry(cell).or_insert(0.0) += w;
    }
    let h: f64 = hist
        .values()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    let h = h / total_cells.ln();
    // A single occupied cell can leave round-off from weights not summing to 1.
    if h < 1e-12 {
        0.0
    } else {
        h.min(1.0)
    }
}

fn inverse_distance_pick<'a>(current: &[f64], candidates: &'a [Vec<f64>], rng: &mut SimRng) -> &'a [f64] {
    let weights: Vec<f64> = candidates
        .iter()
        .map(|c| 1.0 / (distance(current, &c[..current.len().min(c.len())]) + DISTANCE_EPS))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (c, w) in candidates.iter().zip(&weights) {
        if u < *w {
            return c;
        }
        u -= w;
    }
    &candidates[candidates.len() - 1]
}

fn uniform_pick<'a>(candidates: &'a [Vec<f64>], rng: &mut SimRng) -> &'a [f64] {
    &candidates[rng.random_range(0..candidates.len())]
}

/// Draws one subgoal according to `mode`.
pub fn sample_subgoal(mode: HeuristicMode, ctx: &SubgoalContext<'_>, rng: &mut SimRng) -> Result<Vec<f64>> {
    let goal_prob = match mode {
        HeuristicMode::Uniform | HeuristicMode::Distance => ctx.goal_prob,
        HeuristicMode::Entropy => {
            let h = ctx
                .entropy
                .unwrap_or_else(|| normalized_entropy(ctx.belief, ctx.bounds, ctx.grid_resolution));
            if ctx.goals.is_empty() && h < 1.0 && !ctx.informative.is_empty() {
                return Err(Error::Subgoal(
                    "entropy heuristic needs a goal configuration".into(),
                ));
            }
            1.0 - h
        }
    };
    if ctx.goals.is_empty() && ctx.informative.is_empty() {
        return Err(Error::Subgoal("no goal or informative configurations".into()));
    }
    let take_goal = if ctx.informative.is_empty() {
        true
    } else if ctx.goals.is_empty() {
        false
    } else {
        rng.random::<f64>() < goal_prob
    };
    if take_goal {
        if ctx.goals.is_empty() {
            return Err(Error::Subgoal("no goal configuration available".into()));
        }
        return Ok(uniform_pick(ctx.goals, rng).to_vec());
    }
    let pick = match mode {
        HeuristicMode::Uniform => uniform_pick(ctx.informative, rng),
        HeuristicMode::Distance | HeuristicMode::Entropy => {
            inverse_distance_pick(ctx.current, ctx.informative, rng)
        }
    };
    Ok(pick.to_vec())
}

/// Uniformly samples a free configuration by rejection.
pub fn sample_free(world: &Workspace, rng: &mut SimRng) -> Result<Vec<f64>> {
    let b = world.bounds();
    for _ in 0..MAX_REJECTIONS {
        let q: Vec<f64> = (0..world.dim())
            .map(|d| {
                if b.hi[d] > b.lo[d] {
                    rng.random_range(b.lo[d]..=b.hi[d])
                } else {
                    b.lo[d]
                }
            })
            .collect();
        if world.is_valid(&q) {
            return Ok(q);
        }
    }
    Err(Error::Subgoal(format!(
        "{MAX_REJECTIONS} consecutive rejections while sampling free space"
    )))
}

/// ε-greedy wrapper: with probability `epsilon` a uniformly sampled free
/// configuration, otherwise whatever `inner` returns.
pub fn epsilon_wrap<F>(inner: F, epsilon: f64, world: &Workspace, rng: &mut SimRng) -> Result<Vec<f64>>
where
    F: FnOnce(&mut SimRng) -> Result<Vec<f64>>,
{
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        sample_free(world, rng)
    } else {
        inner(rng)
    }
}

/// Number of drones in the tag task and the per-drone configuration dimension.
pub const DRONES: usize = 4;
pub const DRONE_DIM: usize = 3;

/// Joint subgoal for the tag task: sample one joint state from the belief; the
/// drone nearest the sampled target (lowest index on ties) heads for it and
/// every other drone heads for an independent free configuration.
pub fn drone_subgoals(belief: &ParticleBelief, world: &Workspace, rng: &mut SimRng) -> Result<Vec<Vec<f64>>> {
    let s = belief.sample(rng);
    let target = &s.values[DRONES * DRONE_DIM..(DRONES + 1) * DRONE_DIM];
    let chaser = nearest_drone(&s.values, target);
    let mut out = Vec::with_capacity(DRONES);
    for i in 0..DRONES {
        if i == chaser {
            out.push(target.to_vec());
        } else {
            out.push(sample_free(world, rng)?);
        }
    }
    Ok(out)
}

/// Index of the drone closest to `target` (lowest index on ties).
pub fn nearest_drone(joint: &[f64], target: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for i in 0..DRONES {
        let d = distance(&joint[i * DRONE_DIM..(i + 1) * DRONE_DIM], target);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rng_from_seed, State};

    fn belief(points: &[[f64; 2]]) -> ParticleBelief {
        ParticleBelief::uniform(points.iter().map(|p| State::new(p.to_vec())).collect()).unwrap()
    }

    fn unit_bounds() -> Bounds {
        Bounds::new(vec![0.0, 0.0], vec![4.0, 4.0])
    }

    #[test]
    fn entropy_examples() {
        let b = unit_bounds();
        assert_eq!(normalized_entropy(&belief(&[[0.5, 0.5]; 10]), &b, 2.0), 0.0);
        let spread = belief(&[[1.0, 1.0], [3.0, 1.0], [1.0, 3.0], [3.0, 3.0]]);
        assert!((normalized_entropy(&spread, &b, 2.0) - 1.0).abs() < 1e-12);
        let halves = belief(&[[1.0, 1.0], [1.0, 1.0], [3.0, 3.0], [3.0, 3.0]]);
        assert!((normalized_entropy(&halves, &b, 2.0) - 0.5).abs() < 1e-12);
    }

    fn ctx<'a>(
        b: &'a ParticleBelief,
        bounds: &'a Bounds,
        goals: &'a [Vec<f64>],
        info: &'a [Vec<f64>],
        goal_prob: f64,
    ) -> SubgoalContext<'a> {
        SubgoalContext {
            current: &[0.0, 0.0],
            goals,
            informative: info,
            belief: b,
            goal_prob,
            grid_resolution: 2.0,
            bounds,
            entropy: None,
        }
    }

    #[test]
    fn entropy_zero_always_goal() {
        let b = belief(&[[0.5, 0.5]]);
        let bounds = unit_bounds();
        let goals = vec![vec![4.0, 4.0]];
        let info = vec![vec![1.0, 0.0]];
        let c = ctx(&b, &bounds, &goals, &info, 0.5);
        let mut rng = rng_from_seed(0);
        for _ in 0..1000 {
            assert_eq!(sample_subgoal(HeuristicMode::Entropy, &c, &mut rng).unwrap(), goals[0]);
        }
    }

    #[test]
    fn distance_odds_follow_inverse_distance() {
        let b = belief(&[[0.0, 0.0]]);
        let bounds = unit_bounds();
        let goals = vec![vec![4.0, 4.0]];
        let info = vec![vec![1.0, 0.0], vec![3.0, 0.0]];
        let c = ctx(&b, &bounds, &goals, &info, 0.0);
        let mut rng = rng_from_seed(1);
        let n = 40_000;
        let near = (0..n)
            .filter(|_| sample_subgoal(HeuristicMode::Distance, &c, &mut rng).unwrap() == info[0])
            .count();
        // Weights 1/(1+ε) : 1/(3+ε).
        let w0 = 1.0 / (1.0 + DISTANCE_EPS);
        let w1 = 1.0 / (3.0 + DISTANCE_EPS);
        let p = w0 / (w0 + w1);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((near as f64 / n as f64 - p).abs() < 4.0 * se);
    }

    #[test]
    fn uniform_goal_prob_one() {
        let b = belief(&[[0.0, 0.0]]);
        let bounds = unit_bounds();
        let goals = vec![vec![4.0, 4.0]];
        let info = vec![vec![1.0, 0.0]];
        let c = ctx(&b, &bounds, &goals, &info, 1.0);
        let mut rng = rng_from_seed(2);
        for _ in 0..1000 {
            assert_eq!(sample_subgoal(HeuristicMode::Uniform, &c, &mut rng).unwrap(), goals[0]);
        }
    }

    #[test]
    fn empty_sets() {
        let b = belief(&[[0.5, 0.5], [3.5, 3.5]]);
        let bounds = unit_bounds();
        let goals = vec![vec![4.0, 4.0]];
        let info = vec![vec![1.0, 0.0]];
        let mut rng = rng_from_seed(3);
        let only_goals = ctx(&b, &bounds, &goals, &[], 0.0);
        assert_eq!(sample_subgoal(HeuristicMode::Distance, &only_goals, &mut rng).unwrap(), goals[0]);
        let no_goals = ctx(&b, &bounds, &[], &info, 0.5);
        assert!(sample_subgoal(HeuristicMode::Entropy, &no_goals, &mut rng).is_err());
        assert_eq!(sample_subgoal(HeuristicMode::Uniform, &no_goals, &mut rng).unwrap(), info[0]);
    }

    #[test]
    fn drone_tie_goes_to_lowest_index() {
        let mut joint = vec![0.0; 15];
        for i in 0..4 {
            joint[3 * i] = 5.0;
        }
        joint[12] = 5.0;
        joint[13] = 3.0;
        assert_eq!(nearest_drone(&joint, &joint[12..15].to_vec()), 0);
        joint[9 + 1] = 3.0;
        assert_eq!(nearest_drone(&joint, &joint[12..15].to_vec()), 3);
    }
}
