//! Shared dynamics of the point-robot navigation tasks (Light-Dark, Maze2D,
//! Random3D): cardinal moves with optional slip, landmark or light-stripe
//! position readings, goal and danger regions.

use rand::Rng;
use rand_distr::StandardNormal;

use super::scenario::{EnvKind, Scenario};
use crate::belief::ParticleBelief;
use crate::error::{Error, Result};
use crate::model::{Environment, Observation, PrimitiveAction, SimRng, State, Step, StepEvent};
use crate::sbmp::{validate_motion_with, CardinalActions, MAX_LANES};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Direction actually taken for intended action `a`.
pub fn realized_action(scenario: &Scenario, actions: &CardinalActions, a: PrimitiveAction, rng: &mut SimRng) -> PrimitiveAction {
    let slip = scenario.noise.slip;
    if slip <= 0.0 {
        return a;
    }
    let u: f64 = rng.random();
    if u >= slip {
        return a;
    }
    let ortho = actions.orthogonal(a);
    if scenario.noise.randomized_slip || ortho.len() == 2 {
        // Uniform over the orthogonal directions; reuses the slip draw.
        let idx = ((u / slip) * ortho.len() as f64) as usize;
        ortho[idx.min(ortho.len() - 1)]
    } else {
        // Only the in-plane orthogonal pair.
        let idx = ((u / slip) * 2.0) as usize;
        ortho[idx.min(1)]
    }
}

/// Position after moving `q` by `a`: clamped at the bounds in Light-Dark,
/// otherwise unchanged when the move would leave the bounds or hit an obstacle.
pub fn move_config(scenario: &Scenario, actions: &CardinalActions, q: &[f64], a: PrimitiveAction) -> Vec<f64> {
    let (axis, sign) = actions.direction(a);
    let mut next = q.to_vec();
    next[axis] += sign * scenario.step_size;
    let world = &scenario.workspace;
    if scenario.kind == EnvKind::LightDark {
        world.bounds().clamp(&mut next);
    } else if !world.bounds().contains(&next) {
        return q.to_vec();
    }
    if world.obstacles().is_empty() {
        return next;
    }
    let resolution = 0.25 * scenario.step_size;
    if validate_motion_with(q, &next, world, resolution, MAX_LANES) {
        next
    } else {
        q.to_vec()
    }
}

fn gaussian_reading(q: &[f64], sigma: f64, rng: &mut SimRng) -> Vec<f64> {
    q.iter()
        .map(|x| x + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Readings further than this many standard deviations from a particle (on
/// any axis) rule it out, so a filter locked onto the wrong place collapses
/// instead of drifting on.
pub const READING_TRUNCATION: f64 = 5.0;

fn gaussian_log_pdf(o: &[f64], q: &[f64], sigma: f64) -> f64 {
    o.iter()
        .zip(q)
        .map(|(a, b)| {
            let z = (a - b) / sigma;
            if z.abs() > READING_TRUNCATION {
                f64::NEG_INFINITY
            } else {
                -0.5 * z * z - sigma.ln() - LN_SQRT_2PI
            }
        })
        .sum()
}

/// Position reading generated at `q`, if any.
fn sense(scenario: &Scenario, q: &[f64], rng: &mut SimRng) -> Observation {
    if let Some(light) = &scenario.noise.light {
        return Observation::Reading(gaussian_reading(q, light.sigma(q), rng));
    }
    if scenario.in_landmark(q) {
        Observation::Reading(gaussian_reading(q, scenario.noise.obs_sigma, rng))
    } else {
        Observation::Null
    }
}

/// One generative step of a navigation task.
pub fn nav_step(scenario: &Scenario, actions: &CardinalActions, s: &State, a: PrimitiveAction, rng: &mut SimRng) -> Step {
    if s.terminal {
        return Step::absorbed(s);
    }
    let taken = realized_action(scenario, actions, a, rng);
    let next = move_config(scenario, actions, &s.values, taken);
    let (reward, event) = if scenario.in_danger(&next) {
        (scenario.rewards.danger, StepEvent::Failure)
    } else if scenario.in_goal(&next) {
        (scenario.rewards.goal, StepEvent::Success)
    } else {
        (scenario.rewards.step, StepEvent::None)
    };
    let terminal = event != StepEvent::None;
    let observation = if terminal {
        Observation::Terminal
    } else {
        sense(scenario, &next, rng)
    };
    Step {
        state: State {
            values: next,
            terminal,
        },
        observation,
        reward,
        event,
    }
}

/// `log Z(o | s')` for a navigation task.
pub fn nav_log_likelihood(scenario: &Scenario, o: &Observation, next: &State) -> f64 {
    match o {
        Observation::Terminal => {
            if next.terminal {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
        _ if next.terminal => f64::NEG_INFINITY,
        Observation::Null => {
            if scenario.noise.light.is_none() && !scenario.in_landmark(&next.values) {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
        Observation::Reading(r) => {
            if let Some(light) = &scenario.noise.light {
                gaussian_log_pdf(r, &next.values, light.sigma(&next.values))
            } else if scenario.in_landmark(&next.values) {
                gaussian_log_pdf(r, &next.values, scenario.noise.obs_sigma)
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

/// Generative model of a navigation scenario.
#[derive(Clone, Debug)]
pub struct NavEnv {
    scenario: Scenario,
    actions: CardinalActions,
}

impl NavEnv {
    pub fn new(scenario: Scenario) -> Result<Self> {
        if scenario.kind == EnvKind::DroneTag {
            return Err(Error::InvalidParameter("tag scenarios need the tag environment".into()));
        }
        scenario.validate()?;
        let actions = CardinalActions::new(scenario.dim());
        Ok(NavEnv { scenario, actions })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn actions(&self) -> CardinalActions {
        self.actions
    }

    fn sample_spawn(&self, index: usize, rng: &mut SimRng) -> State {
        let spawn = &self.scenario.spawns[index];
        let sigma = self.scenario.noise.initial_sigma;
        if sigma <= 0.0 {
            return State::new(spawn.clone());
        }
        let world = &self.scenario.workspace;
        for _ in 0..100 {
            let mut q = gaussian_reading(spawn, sigma, rng);
            world.bounds().clamp(&mut q);
            if world.is_valid(&q) && !self.scenario.in_goal(&q) && !self.scenario.in_danger(&q) {
                return State::new(q);
            }
        }
        State::new(spawn.clone())
    }
}

impl Environment for NavEnv {
    fn name(&self) -> &str {
        match self.scenario.kind {
            EnvKind::LightDark => "lightdark",
            EnvKind::Maze2d => "maze2d",
            EnvKind::Random3d => "random3d",
            EnvKind::DroneTag => unreachable!(),
        }
    }

    fn state_dim(&self) -> usize {
        self.scenario.dim()
    }

    fn num_actions(&self) -> usize {
        self.actions.count()
    }

    fn step(&self, s: &State, a: PrimitiveAction, rng: &mut SimRng) -> Step {
        nav_step(&self.scenario, &self.actions, s, a, rng)
    }

    fn observation_log_likelihood(&self, o: &Observation, next: &State, _a: PrimitiveAction) -> f64 {
        nav_log_likelihood(&self.scenario, o, next)
    }

    fn sample_initial_state(&self, rng: &mut SimRng) -> State {
        let i = rng.random_range(0..self.scenario.spawns.len());
        self.sample_spawn(i, rng)
    }

    /// Particles redrawn around a position reading (snapped to the spawn
    /// lattice when motion keeps states on it); `None` for other observations.
    fn reinvigorate(&self, propagated: &[State], o: &Observation, rng: &mut SimRng) -> Option<Vec<State>> {
        let Observation::Reading(r) = o else {
            return None;
        };
        let sc = &self.scenario;
        let sigma = match &sc.noise.light {
            Some(light) => light.sigma(r),
            None => sc.noise.obs_sigma,
        };
        let lattice = (sc.noise.initial_sigma == 0.0).then(|| &sc.spawns[0]);
        let out: Vec<State> = propagated
            .iter()
            .filter_map(|_| {
                (0..20).find_map(|_| {
                    let mut q = gaussian_reading(r, sigma, rng);
                    if let Some(origin) = lattice {
                        for (x, o) in q.iter_mut().zip(origin) {
                            *x = o + ((*x - o) / sc.step_size).round() * sc.step_size;
                        }
                    }
                    let s = State::new(q);
                    let fits = sc.workspace.is_valid(&s.values)
                        && !sc.in_goal(&s.values)
                        && nav_log_likelihood(sc, o, &s).is_finite();
                    fits.then_some(s)
                })
            })
            .collect();
        (!out.is_empty()).then_some(out)
    }

    /// Particles split evenly over the spawns, each drawn from the spawn's
    /// initial spread.
    fn initial_belief(&self, particles: usize, rng: &mut SimRng) -> ParticleBelief {
        let n = particles.max(1);
        let k = self.scenario.spawns.len();
        let states = (0..n).map(|i| self.sample_spawn(i % k, rng)).collect();
        ParticleBelief::uniform(states).expect("at least one particle")
    }
}
