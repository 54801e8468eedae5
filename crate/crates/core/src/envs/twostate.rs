//! A two-state, two-action, two-observation POMDP small enough to solve the
//! soft-Bellman recursion exactly over beliefs. Used to check the sampled
//! solver against ground truth.

use rand::Rng;

use crate::belief::ParticleBelief;
use crate::model::{Environment, Observation, PrimitiveAction, SimRng, State, Step, StepEvent};
use crate::reference::ValueHeuristic;

#[derive(Clone, Debug, PartialEq)]
pub struct TwoStatePomdp {
    /// `P(s' = s | s, a = 0)`.
    pub stay: f64,
    /// `P(s' = 1 - s | s, a = 1)`.
    pub switch: f64,
    /// `P(o = s')`.
    pub accuracy: f64,
    /// `rewards[s][a]`.
    pub rewards: [[f64; 2]; 2],
    /// Value of each state below the depth limit.
    pub leaf: [f64; 2],
    /// `P(s = 1)` initially.
    pub prior_one: f64,
}

impl Default for TwoStatePomdp {
    fn default() -> Self {
        TwoStatePomdp {
            stay: 0.9,
            switch: 0.8,
            accuracy: 0.85,
            rewards: [[-0.2, 0.5], [1.0, -0.5]],
            leaf: [0.0, 2.0],
            prior_one: 0.5,
        }
    }
}

fn index(s: &State) -> usize {
    (s.values[0] > 0.5) as usize
}

impl TwoStatePomdp {
    /// `P(s' | s, a)`.
    pub fn transition(&self, s: usize, a: usize, next: usize) -> f64 {
        let keep = if a == 0 { self.stay } else { 1.0 - self.switch };
        if next == s {
            keep
        } else {
            1.0 - keep
        }
    }

    pub fn observation(&self, next: usize, o: usize) -> f64 {
        if o == next {
            self.accuracy
        } else {
            1.0 - self.accuracy
        }
    }

    /// Exact soft value of belief `P(s = 1) = b1` at `depth` under a uniform
    /// reference over the two actions; nodes deeper than `max_depth` take the
    /// expected leaf value.
    pub fn exact_soft_value(&self, b1: f64, depth: usize, max_depth: usize, gamma: f64, eta: f64) -> f64 {
        let b = [1.0 - b1, b1];
        if depth > max_depth {
            return b[0] * self.leaf[0] + b[1] * self.leaf[1];
        }
        let q: Vec<f64> = (0..2)
            .map(|a| {
                let r = b[0] * self.rewards[0][a] + b[1] * self.rewards[1][a];
                let predicted: Vec<f64> = (0..2)
                    .map(|n| (0..2).map(|s| b[s] * self.transition(s, a, n)).sum())
                    .collect();
                let mut future = 0.0;
                for o in 0..2 {
                    let joint: Vec<f64> = (0..2).map(|n| predicted[n] * self.observation(n, o)).collect();
                    let p_o = joint[0] + joint[1];
                    if p_o > 0.0 {
                        future += p_o * self.exact_soft_value(joint[1] / p_o, depth + 1, max_depth, gamma, eta);
                    }
                }
                r + gamma * future
            })
            .collect();
        crate::soft::soft_value(&[0.5, 0.5], &q, eta).expect("finite q-values")
    }
}

impl Environment for TwoStatePomdp {
    fn name(&self) -> &str {
        "twostate"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn step(&self, s: &State, a: PrimitiveAction, rng: &mut SimRng) -> Step {
        if s.terminal {
            return Step::absorbed(s);
        }
        let i = index(s);
        let a = a.0 as usize;
        let next = if rng.random::<f64>() < self.transition(i, a, i) { i } else { 1 - i };
        let o = if rng.random::<f64>() < self.accuracy { next } else { 1 - next };
        Step {
            state: State::new(vec![next as f64]),
            observation: Observation::Reading(vec![o as f64]),
            reward: self.rewards[i][a],
            event: StepEvent::None,
        }
    }

    fn observation_log_likelihood(&self, o: &Observation, next: &State, _a: PrimitiveAction) -> f64 {
        match o {
            Observation::Reading(v) if v.len() == 1 => self.observation(index(next), (v[0] > 0.5) as usize).ln(),
            _ => f64::NEG_INFINITY,
        }
    }

    fn sample_initial_state(&self, rng: &mut SimRng) -> State {
        State::new(vec![(rng.random::<f64>() < self.prior_one) as u8 as f64])
    }

    /// Deterministic split: the first `round(n·(1 - prior))` particles are state 0.
    fn initial_belief(&self, particles: usize, _rng: &mut SimRng) -> ParticleBelief {
        let n = particles.max(1);
        let zeros = ((1.0 - self.prior_one) * n as f64).round() as usize;
        let states = (0..n).map(|i| State::new(vec![(i >= zeros) as u8 as f64])).collect();
        ParticleBelief::uniform(states).expect("nonempty")
    }
}

impl ValueHeuristic for TwoStatePomdp {
    fn value(&self, s: &State, _rng: &mut SimRng) -> f64 {
        if s.terminal {
            0.0
        } else {
            self.leaf[index(s)]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_depth_matches_hand_computation() {
        // One decision at the root, leaves below it.
        let p = TwoStatePomdp::default();
        let (gamma, eta) = (0.99f64, 0.2f64);
        // b = (0.5, 0.5): after a = 0, P(s' = 1) = 0.5; after a = 1 also 0.5,
        // so the expected leaf value is 1 either way.
        let q0 = 0.5 * -0.2 + 0.5 * 1.0 + gamma * 1.0;
        let q1 = 0.5 * 0.5 + 0.5 * -0.5 + gamma * 1.0;
        let expected = (0.5 * (eta * q0).exp() + 0.5 * (eta * q1).exp()).ln() / eta;
        let v = p.exact_soft_value(0.5, 0, 0, gamma, eta);
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
    }

    #[test]
    fn transition_rows_sum_to_one() {
        let p = TwoStatePomdp::default();
        for s in 0..2 {
            for a in 0..2 {
                assert!((p.transition(s, a, 0) + p.transition(s, a, 1) - 1.0).abs() < 1e-15);
            }
        }
    }
}
