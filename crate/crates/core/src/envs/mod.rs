//! Benchmark environments: Light-Dark, Maze2D, Random3D and Multi-Drone Tag.

mod dronetag;
mod lightdark;
mod maze2d;
mod nav;
mod random3d;
mod scenario;
mod twostate;

pub use dronetag::{
    closest_drone, decode_joint, dronetag_scenario, dronetag_step, encode_joint, evasion_direction,
    target_move, DroneTag, JOINT_DIM,
};
pub use lightdark::{lightdark_scenario, lightdark_scenario_with, lightdark_step};
pub use maze2d::{maze2d_scenario, maze2d_step};
pub use nav::{move_config, nav_log_likelihood, nav_step, realized_action, NavEnv};
pub use random3d::{random3d_bounds, random3d_generate, random3d_step, RegionCounts, MIN_GOAL_DISTANCE, SPAWN as RANDOM3D_SPAWN, VARIANTS};
pub use twostate::TwoStatePomdp;
pub use scenario::{
    EnvKind, EpisodeLimits, LightStripe, NoiseParams, RewardSchedule, Scenario, TagParams,
};

use crate::belief::ParticleBelief;
use crate::error::Result;
use crate::model::{Environment, Observation, PrimitiveAction, SimRng, State, Step};

/// Default scenario for `kind`. Light-Dark and Random3D layouts are drawn
/// from `seed` (Random3D uses its first variant); Maze2D and tag are fixed.
pub fn default_scenario(kind: EnvKind, seed: u64) -> Result<Scenario> {
    match kind {
        EnvKind::LightDark => lightdark_scenario(seed),
        EnvKind::Maze2d => Ok(maze2d_scenario()),
        EnvKind::Random3d => random3d_generate(seed, RegionCounts::variant(0), None),
        EnvKind::DroneTag => Ok(dronetag_scenario()),
    }
}

/// Any benchmark environment behind one concrete type.
#[derive(Clone, Debug)]
pub enum EnvInstance {
    Nav(NavEnv),
    Tag(DroneTag),
}

impl EnvInstance {
    pub fn from_scenario(scenario: Scenario) -> Result<Self> {
        match scenario.kind {
            EnvKind::DroneTag => Ok(EnvInstance::Tag(DroneTag::new(scenario)?)),
            _ => Ok(EnvInstance::Nav(NavEnv::new(scenario)?)),
        }
    }

    pub fn scenario(&self) -> &Scenario {
        match self {
            EnvInstance::Nav(e) => e.scenario(),
            EnvInstance::Tag(e) => e.scenario(),
        }
    }

    pub fn kind(&self) -> EnvKind {
        self.scenario().kind
    }

    fn inner(&self) -> &dyn Environment {
        match self {
            EnvInstance::Nav(e) => e,
            EnvInstance::Tag(e) => e,
        }
    }
}

impl Environment for EnvInstance {
    fn name(&self) -> &str {
        self.inner().name()
    }

    fn state_dim(&self) -> usize {
        self.inner().state_dim()
    }

    fn num_actions(&self) -> usize {
        self.inner().num_actions()
    }

    fn step(&self, s: &State, a: PrimitiveAction, rng: &mut SimRng) -> Step {
        self.inner().step(s, a, rng)
    }

    fn observation_log_likelihood(&self, o: &Observation, next: &State, a: PrimitiveAction) -> f64 {
        self.inner().observation_log_likelihood(o, next, a)
    }

    fn sample_initial_state(&self, rng: &mut SimRng) -> State {
        self.inner().sample_initial_state(rng)
    }

    fn initial_belief(&self, particles: usize, rng: &mut SimRng) -> ParticleBelief {
        self.inner().initial_belief(particles, rng)
    }

    fn reinvigorate(&self, propagated: &[State], o: &Observation, rng: &mut SimRng) -> Option<Vec<State>> {
        self.inner().reinvigorate(propagated, o, rng)
    }
}
