//! POMDP vocabulary shared by every environment and planner.

use std::fmt;
use std::time::Duration;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::belief::ParticleBelief;
use crate::error::{Error, Result};

/// Random generator used throughout. All randomness flows through
/// caller-owned instances of this type.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Seeds a generator from a `u64`.
pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// A point in the robot configuration/state space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub values: Vec<f64>,
    #[serde(default)]
    pub terminal: bool,
}

impl State {
    pub fn new(values: Vec<f64>) -> Self {
        State {
            values,
            terminal: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Index into an environment's primitive action set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimitiveAction(pub u16);

impl PrimitiveAction {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A nonempty sequence of primitive actions executed as one decision.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MacroAction(Vec<PrimitiveAction>);

impl MacroAction {
    pub fn new(actions: Vec<PrimitiveAction>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidParameter(
                "macro action must contain at least one primitive action".into(),
            ));
        }
        Ok(MacroAction(actions))
    }

    pub fn single(action: PrimitiveAction) -> Self {
        MacroAction(vec![action])
    }

    /// Discount exponent `|ā|`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn actions(&self) -> &[PrimitiveAction] {
        &self.0
    }

    pub fn truncated(&self, max_len: usize) -> MacroAction {
        let n = self.0.len().min(max_len.max(1));
        MacroAction(self.0[..n].to_vec())
    }
}

impl fmt::Display for MacroAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.0.iter().map(|a| a.0.to_string()).collect();
        write!(f, "[{}]", ids.join(","))
    }
}

/// What the robot perceives after one primitive step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Observation {
    /// No reading.
    Null,
    /// A noisy position reading.
    Reading(Vec<f64>),
    /// Episode-ending feedback: goal reached, danger entered or target captured.
    Terminal,
}

impl Observation {
    /// Discretizes the observation into a tree-branching key.
    pub fn key(&self, resolution: f64) -> ObsKey {
        match self {
            Observation::Null => ObsKey::Null,
            Observation::Terminal => ObsKey::Terminal,
            Observation::Reading(v) => ObsKey::Cell(
                v.iter()
                    .map(|x| (x / resolution).round() as i32)
                    .collect(),
            ),
        }
    }
}

/// Discretized observation symbol used to index belief-tree children.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObsKey {
    Null,
    Terminal,
    Cell(SmallVec<[i32; 4]>),
}

/// One observation key per executed primitive step of a macro action.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MacroObservation(pub Vec<ObsKey>);

impl MacroObservation {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Why a transition ended the episode, if it did.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepEvent {
    None,
    /// Goal region entered or target captured.
    Success,
    /// Danger zone entered.
    Failure,
}

/// Result of one generative-model step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub state: State,
    pub observation: Observation,
    pub reward: f64,
    pub event: StepEvent,
}

impl Step {
    /// Terminal states absorb: same state, no observation, zero reward.
    pub fn absorbed(s: &State) -> Step {
        Step {
            state: s.clone(),
            observation: Observation::Null,
            reward: 0.0,
            event: StepEvent::None,
        }
    }

    pub fn terminal(&self) -> bool {
        self.state.terminal
    }
}

/// Black-box generative model `G(s, a) -> (s', o, r)` plus the observation
/// function needed by the particle filter.
pub trait Environment: Send + Sync {
    fn name(&self) -> &str;

    fn state_dim(&self) -> usize;

    fn num_actions(&self) -> usize;

    fn step(&self, s: &State, a: PrimitiveAction, rng: &mut SimRng) -> Step;

    /// `log Z(o | s', a)`; `f64::NEG_INFINITY` where the observation is impossible.
    fn observation_log_likelihood(&self, o: &Observation, next: &State, a: PrimitiveAction) -> f64;

    fn sample_initial_state(&self, rng: &mut SimRng) -> State;

    fn initial_belief(&self, particles: usize, rng: &mut SimRng) -> ParticleBelief;

    /// Particles consistent with `o`, built from propagated particles that all
    /// contradict it. `None` keeps the propagated particles as they are.
    fn reinvigorate(&self, _propagated: &[State], _o: &Observation, _rng: &mut SimRng) -> Option<Vec<State>> {
        None
    }
}

/// Outcome of executing a macro action through the generative model.
#[derive(Clone, Debug)]
pub struct MacroOutcome {
    pub state: State,
    pub observations: Vec<Observation>,
    pub rewards: Vec<f64>,
    pub event: StepEvent,
}

impl MacroOutcome {
    pub fn steps(&self) -> usize {
        self.rewards.len()
    }

    pub fn key(&self, resolution: f64) -> MacroObservation {
        MacroObservation(self.observations.iter().map(|o| o.key(resolution)).collect())
    }
}

/// Runs `macro_action` primitive step by primitive step, stopping early at a terminal state.
pub fn execute_macro(
    env: &dyn Environment,
    s: &State,
    macro_action: &MacroAction,
    rng: &mut SimRng,
) -> MacroOutcome {
    let mut state = s.clone();
    let mut observations = Vec::with_capacity(macro_action.len());
    let mut rewards = Vec::with_capacity(macro_action.len());
    let mut event = StepEvent::None;
    for &a in macro_action.actions() {
        if state.terminal {
            break;
        }
        let step = env.step(&state, a, rng);
        observations.push(step.observation);
        rewards.push(step.reward);
        event = step.event;
        state = step.state;
    }
    MacroOutcome {
        state,
        observations,
        rewards,
        event,
    }
}

/// Planning budget: wall clock (benchmark realism) or simulation count (replay determinism).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Time(Duration),
    Simulations(u64),
}

impl Budget {
    pub fn millis(ms: u64) -> Self {
        Budget::Time(Duration::from_millis(ms))
    }
}

/// Shared solver parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub gamma: f64,
    pub eta: f64,
    pub max_depth: usize,
    pub budget: Budget,
    pub particle_count: usize,
    pub obs_resolution: f64,
    pub max_macro_len: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            gamma: 0.99,
            eta: 0.2,
            max_depth: 3,
            budget: Budget::millis(1000),
            particle_count: 1000,
            obs_resolution: 1.0,
            max_macro_len: 10,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidParameter("max_depth must be >= 1".into()));
        }
        if self.particle_count < 1 {
            return Err(Error::InvalidParameter("particle_count must be >= 1".into()));
        }
        if !(self.obs_resolution > 0.0) {
            return Err(Error::InvalidParameter(
                "obs_resolution must be positive".into(),
            ));
        }
        if self.max_macro_len < 1 {
            return Err(Error::InvalidParameter("max_macro_len must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_keys_round_to_grid() {
        let o = Observation::Reading(vec![1.4, -0.6, 2.51]);
        assert_eq!(o.key(1.0), ObsKey::Cell(smallvec::smallvec![1, -1, 3]));
        assert_eq!(o.key(0.5), ObsKey::Cell(smallvec::smallvec![3, -1, 5]));
        assert_eq!(Observation::Null.key(1.0), ObsKey::Null);
        assert_ne!(Observation::Null.key(1.0), Observation::Terminal.key(1.0));
    }

    #[test]
    fn empty_macro_rejected() {
        assert!(MacroAction::new(vec![]).is_err());
        let m = MacroAction::new(vec![PrimitiveAction(1), PrimitiveAction(2)]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.truncated(1).len(), 1);
    }

    #[test]
    fn params_validation() {
        let mut p = SolverParams::default();
        assert!(p.validate().is_ok());
        p.gamma = 1.0;
        assert!(p.validate().is_err());
        p.gamma = 0.99;
        p.eta = 0.0;
        assert!(p.validate().is_err());
    }
}
