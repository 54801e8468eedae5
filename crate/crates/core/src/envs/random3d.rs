//! Random3D: uniformly scattered box obstacles, spherical danger zones and
//! landmarks in a flat 50×50×6 volume, generated from a seed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nav::nav_step;
use super::scenario::{EnvKind, EpisodeLimits, NoiseParams, RewardSchedule, Scenario};
use crate::error::{Error, Result};
use crate::model::{rng_from_seed, PrimitiveAction, SimRng, State, Step};
use crate::sbmp::{rrt_connect, Bounds, CardinalActions, PlannerParams, Shape, Workspace};

pub const SPAWN: [f64; 3] = [25.0, 25.0, 3.0];
/// Minimum Manhattan distance from the spawn to the goal center.
pub const MIN_GOAL_DISTANCE: f64 = 40.0;
pub const GOAL_RADIUS: f64 = 1.5;
const MAX_ATTEMPTS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCounts {
    pub obstacles: usize,
    pub danger_zones: usize,
    pub landmarks: usize,
}

/// The four benchmark variants as (obstacles, danger zones).
pub const VARIANTS: [(usize, usize); 4] = [(100, 15), (200, 10), (300, 10), (400, 5)];

impl RegionCounts {
    /// Variant `i` (0-based) of [`VARIANTS`] with the default landmark count.
    pub fn variant(i: usize) -> RegionCounts {
        let (obstacles, danger_zones) = VARIANTS[i];
        RegionCounts {
            obstacles,
            danger_zones,
            landmarks: 12,
        }
    }
}

pub fn random3d_bounds() -> Bounds {
    Bounds::new(vec![0.0, 0.0, 0.0], vec![50.0, 50.0, 6.0])
}

fn uniform_point(b: &Bounds, rng: &mut SimRng) -> Vec<f64> {
    (0..b.dim()).map(|d| rng.random_range(b.lo[d]..b.hi[d])).collect()
}

fn manhattan(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn clear_of(shape: &Shape, q: &[f64], margin: f64) -> bool {
    let c = shape.closest_point(q);
    let d2: f64 = c.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
    d2 > margin * margin
}

fn attempt(counts: RegionCounts, bounds: &Bounds, rng: &mut SimRng) -> Option<Scenario> {
    let mut obstacles = Vec::with_capacity(counts.obstacles);
    while obstacles.len() < counts.obstacles {
        let c = uniform_point(bounds, rng);
        let e: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..1.5)).collect();
        let shape = Shape::Box { center: c, extents: e };
        if clear_of(&shape, &SPAWN, 1.0) {
            obstacles.push(shape);
        }
    }
    let world = Workspace::new(bounds.clone(), obstacles).ok()?;
    let mut danger_zones = Vec::with_capacity(counts.danger_zones);
    while danger_zones.len() < counts.danger_zones {
        let c = uniform_point(bounds, rng);
        let r = rng.random_range(1.0..2.5);
        let shape = Shape::sphere(&c, r);
        if clear_of(&shape, &SPAWN, 1.0) {
            danger_zones.push(shape);
        }
    }
    let mut landmarks = Vec::with_capacity(counts.landmarks);
    let mut tries = 0;
    while landmarks.len() < counts.landmarks && tries < 100 * (counts.landmarks + 1) {
        tries += 1;
        let c = uniform_point(bounds, rng);
        let shape = Shape::sphere(&c, 1.5);
        if world.is_valid(&c) && danger_zones.iter().all(|z| !z.may_intersect(&shape)) {
            landmarks.push(shape);
        }
    }
    let mut goal = None;
    for _ in 0..1000 {
        let c = uniform_point(bounds, rng);
        let shape = Shape::sphere(&c, GOAL_RADIUS);
        if manhattan(&c, &SPAWN) >= MIN_GOAL_DISTANCE
            && world.is_valid(&c)
            && danger_zones.iter().all(|z| !z.may_intersect(&shape))
        {
            goal = Some(shape);
            break;
        }
    }
    let goal = goal?;
    let scenario = Scenario {
        kind: EnvKind::Random3d,
        workspace: world,
        landmarks,
        danger_zones,
        spawns: vec![SPAWN.to_vec()],
        goals: vec![goal],
        rewards: RewardSchedule {
            step: -0.1,
            goal: 800.0,
            danger: -800.0,
        },
        step_size: 1.0,
        noise: NoiseParams {
            slip: 0.2,
            randomized_slip: true,
            obs_sigma: 0.1,
            light: None,
            initial_sigma: 0.0,
        },
        limits: EpisodeLimits {
            max_primitive_steps: 800,
            max_planning_cycles: 800,
        },
        tag: None,
        seed: None,
    };
    let planning = scenario.planning_workspace();
    let params = PlannerParams {
        max_iterations: 20_000,
        ..PlannerParams::for_step(1.0)
    };
    rrt_connect(&SPAWN, scenario.goals[0].center(), &planning, &params, rng).ok()?;
    Some(scenario)
}

/// Generates a feasible Random3D scenario: regions are placed uniformly, the
/// goal is at least [`MIN_GOAL_DISTANCE`] (Manhattan) from the central spawn,
/// and a motion-planner query certifies that the goal is reachable around
/// obstacles and danger zones. Infeasible draws are regenerated.
pub fn random3d_generate(seed: u64, counts: RegionCounts, bounds: Option<Bounds>) -> Result<Scenario> {
    let bounds = bounds.unwrap_or_else(random3d_bounds);
    if bounds.dim() != 3 || !bounds.contains(&SPAWN) {
        return Err(Error::InvalidParameter("Random3D bounds must be 3-D and contain the spawn".into()));
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(mut s) = attempt(counts, &bounds, &mut rng) {
            s.seed = Some(seed);
            return Ok(s);
        }
    }
    Err(Error::Generation(format!(
        "no feasible Random3D layout after {MAX_ATTEMPTS} attempts (seed {seed})"
    )))
}

pub fn random3d_step(s: &State, a: PrimitiveAction, scenario: &Scenario, rng: &mut SimRng) -> Step {
    debug_assert_eq!(scenario.kind, EnvKind::Random3d);
    nav_step(scenario, &CardinalActions::new(3), s, a, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbmp::UP;

    #[test]
    fn variant_counts() {
        let s = random3d_generate(7, RegionCounts::variant(0), None).unwrap();
        assert_eq!(s.workspace.obstacles().len(), 100);
        assert_eq!(s.danger_zones.len(), 15);
        s.validate().unwrap();
    }

    #[test]
    fn replay_is_byte_identical() {
        let a = random3d_generate(11, RegionCounts::variant(1), None).unwrap();
        let b = random3d_generate(11, RegionCounts::variant(1), None).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn ceiling_blocks_upward_moves() {
        let s = random3d_generate(3, RegionCounts { obstacles: 0, danger_zones: 0, landmarks: 0 }, None).unwrap();
        let mut rng = rng_from_seed(0);
        let top = State::new(vec![25.0, 25.0, 6.0]);
        for _ in 0..100 {
            let step = random3d_step(&top, UP, &s, &mut rng);
            assert!(step.state.values[2] <= 6.0);
        }
    }
}
