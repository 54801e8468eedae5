//! Light-Dark: an 8×8 box, a vertical light stripe that gives accurate
//! position readings, and increasingly noisy readings away from it.

use rand::Rng;

use super::nav::nav_step;
use super::scenario::{EnvKind, EpisodeLimits, LightStripe, NoiseParams, RewardSchedule, Scenario};
use crate::error::{Error, Result};
use crate::model::{rng_from_seed, PrimitiveAction, SimRng, State, Step};
use crate::sbmp::{Bounds, CardinalActions, Shape, Workspace};

pub const SIZE: f64 = 8.0;
pub const STEP: f64 = 0.5;
pub const MIN_SEPARATION: f64 = 4.0;
pub const GOAL_RADIUS: f64 = 0.5;
pub const STRIPE_HALF_WIDTH: f64 = 0.25;

/// Light-Dark with an explicit start, goal and stripe position.
pub fn lightdark_scenario_with(start: [f64; 2], goal: [f64; 2], stripe_x: f64) -> Scenario {
    let bounds = Bounds::new(vec![0.0, 0.0], vec![SIZE, SIZE]);
    Scenario {
        kind: EnvKind::LightDark,
        workspace: Workspace::empty(bounds),
        landmarks: vec![Shape::aabb(
            &[(stripe_x - STRIPE_HALF_WIDTH).max(0.0), 0.0],
            &[(stripe_x + STRIPE_HALF_WIDTH).min(SIZE), SIZE],
        )],
        danger_zones: vec![],
        spawns: vec![start.to_vec()],
        goals: vec![Shape::sphere(&goal, GOAL_RADIUS)],
        rewards: RewardSchedule {
            step: -0.1,
            goal: 100.0,
            danger: 0.0,
        },
        step_size: STEP,
        noise: NoiseParams {
            slip: 0.0,
            randomized_slip: false,
            obs_sigma: 0.0,
            light: Some(LightStripe {
                x: stripe_x,
                sigma_min: 0.05,
                slope: 0.3,
            }),
            initial_sigma: 1.0,
        },
        limits: EpisodeLimits {
            max_primitive_steps: 100,
            max_planning_cycles: 100,
        },
        tag: None,
        seed: None,
    }
}

/// Random Light-Dark instance: start, goal and stripe drawn uniformly in the
/// box with the start at least 4 units from the goal and horizontally at
/// least 4 units from the stripe.
pub fn lightdark_scenario(seed: u64) -> Result<Scenario> {
    let mut rng = rng_from_seed(seed);
    for _ in 0..10_000 {
        let start = [rng.random_range(0.0..SIZE), rng.random_range(0.0..SIZE)];
        let goal = [rng.random_range(0.0..SIZE), rng.random_range(0.0..SIZE)];
        let stripe = rng.random_range(0.0..SIZE);
        let d = ((start[0] - goal[0]).powi(2) + (start[1] - goal[1]).powi(2)).sqrt();
        if d >= MIN_SEPARATION && (start[0] - stripe).abs() >= MIN_SEPARATION {
            let mut s = lightdark_scenario_with(start, goal, stripe);
            s.seed = Some(seed);
            return Ok(s);
        }
    }
    Err(Error::Generation("no Light-Dark layout satisfied the separation".into()))
}

pub fn lightdark_step(s: &State, a: PrimitiveAction, scenario: &Scenario, rng: &mut SimRng) -> Step {
    debug_assert_eq!(scenario.kind, EnvKind::LightDark);
    nav_step(scenario, &CardinalActions::new(2), s, a, rng)
}
