//! Particle beliefs and the sequential-importance-resampling update.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Environment, Observation, PrimitiveAction, SimRng, State};

/// Weighted multiset of states approximating a belief.
///
/// Weights are `None` while the belief is uniform, which is the common case
/// after resampling and inside the search tree.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleBelief {
    states: Vec<State>,
    weights: Option<Vec<f64>>,
    cdf: Option<Vec<f64>>,
}

impl ParticleBelief {
    /// Uniform belief over `states`.
    pub fn uniform(states: Vec<State>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Domain("a belief needs at least one particle".into()));
        }
        let dim = states[0].dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(ParticleBelief {
            states,
            weights: None,
            cdf: None,
        })
    }

    /// Weighted belief; weights are normalized here.
    pub fn weighted(states: Vec<State>, weights: Vec<f64>) -> Result<Self> {
        if states.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                got: weights.len(),
            });
        }
        let mut belief = Self::uniform(states)?;
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Domain("particle weights must be finite and >= 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("particle weights sum to zero".into()));
        }
        let normalized: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cdf = normalized
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        belief.weights = Some(normalized);
        belief.cdf = Some(cdf);
        Ok(belief)
    }

    pub fn point_mass(state: State, count: usize) -> Self {
        ParticleBelief {
            states: vec![state; count.max(1)],
            weights: None,
            cdf: None,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.is_none()
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.states.len() as f64,
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&State, f64)> + '_ {
        self.states.iter().enumerate().map(|(i, s)| (s, self.weight(i)))
    }

    /// Draws one particle according to the weights.
    pub fn sample<'a>(&'a self, rng: &mut SimRng) -> &'a State {
        match &self.cdf {
            None => &self.states[rng.random_range(0..self.states.len())],
            Some(cdf) => {
                let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
                let i = cdf.partition_point(|&c| c <= u).min(self.states.len() - 1);
                &self.states[i]
            }
        }
    }

    /// Appends an equally weighted particle. Only valid on uniform beliefs.
    pub fn push(&mut self, state: State) {
        assert!(
            self.weights.is_none(),
            "push is only defined for uniform beliefs"
        );
        debug_assert_eq!(state.dim(), self.dim());
        self.states.push(state);
    }

    /// Probability mass on terminal particles.
    pub fn terminal_mass(&self) -> f64 {
        self.iter()
            .filter(|(s, _)| s.terminal)
            .map(|(_, w)| w)
            .sum()
    }

    /// Weighted mean of the state vectors.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (s, w) in self.iter() {
            for (acc, x) in m.iter_mut().zip(&s.values) {
                *acc += w * x;
            }
        }
        m
    }

    /// Systematic (low-variance) resampling to `count` equally weighted particles.
    pub fn resample(&self, count: usize, rng: &mut SimRng) -> ParticleBelief {
        let count = count.max(1);
        let n = self.states.len();
        let mut out = Vec::with_capacity(count);
        let step = 1.0 / count as f64;
        let mut u = rng.random::<f64>() * step;
        let mut i = 0;
        let mut acc = self.weight(0);
        for _ in 0..count {
            while u > acc && i + 1 < n {
                i += 1;
                acc += self.weight(i);
            }
            out.push(self.states[i].clone());
            u += step;
        }
        ParticleBelief {
            states: out,
            weights: None,
            cdf: None,
        }
    }
}

/// Result of one filter step.
#[derive(Clone, Debug)]
pub struct BeliefUpdate {
    pub belief: ParticleBelief,
    /// Every particle had zero likelihood; the belief was reinvigorated from the
    /// propagated particles alone.
    pub collapsed: bool,
}

/// Propagates every particle through the transition model.
pub fn propagate(
    belief: &ParticleBelief,
    action: PrimitiveAction,
    env: &dyn Environment,
    rng: &mut SimRng,
) -> Vec<State> {
    belief
        .states()
        .iter()
        .map(|s| env.step(s, action, rng).state)
        .collect()
}

/// Importance weights `∝ Z(o | s', a)` for propagated particles, computed in log
/// space and normalized by the largest term. `None` when every likelihood is zero.
pub fn reweight(
    prior_weights: &[f64],
    propagated: &[State],
    action: PrimitiveAction,
    observation: &Observation,
    env: &dyn Environment,
) -> Option<Vec<f64>> {
    let log_w: Vec<f64> = propagated
        .iter()
        .zip(prior_weights)
        .map(|(s, w)| {
            if *w > 0.0 {
                w.ln() + env.observation_log_likelihood(observation, s, action)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let w: Vec<f64> = log_w.iter().map(|lw| (lw - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Some(w.into_iter().map(|x| x / total).collect())
}

/// One sequential-importance-resampling step `b' = τ(b, a, o)`.
///
/// Propagates, reweights by the observation likelihood and resamples to
/// `particle_count`. If every particle is inconsistent with `observation` the
/// environment may rebuild consistent particles; otherwise the propagated
/// particles are kept with their prior weights. Either way `collapsed` is set.
pub fn belief_update(
    belief: &ParticleBelief,
    action: PrimitiveAction,
    observation: &Observation,
    env: &dyn Environment,
    particle_count: usize,
    rng: &mut SimRng,
) -> BeliefUpdate {
    let propagated = propagate(belief, action, env, rng);
    let prior = belief.weights();
    match reweight(&prior, &propagated, action, observation, env) {
        Some(weights) => {
            let weighted = ParticleBelief::weighted(propagated, weights)
                .expect("normalized weights over a nonempty particle set");
            BeliefUpdate {
                belief: weighted.resample(particle_count, rng),
                collapsed: false,
            }
        }
        None => {
            let reinvigorated = match env.reinvigorate(&propagated, observation, rng) {
                Some(states) if !states.is_empty() => ParticleBelief::uniform(states).expect("nonempty"),
                _ => ParticleBelief::weighted(propagated, prior).expect("prior weights are normalized"),
            };
            BeliefUpdate {
                belief: reinvigorated.resample(particle_count, rng),
                collapsed: true,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rng_from_seed, Step, StepEvent};

    /// 1-D random walk whose observation likelihood is read off the state's
    /// second coordinate, so tests can dictate per-particle likelihoods.
    struct Scripted;

    impl Environment for Scripted {
        fn name(&self) -> &str {
            "scripted"
        }
        fn state_dim(&self) -> usize {
            2
        }
        fn num_actions(&self) -> usize {
            1
        }
        fn step(&self, s: &State, _a: PrimitiveAction, _rng: &mut SimRng) -> Step {
            Step {
                state: s.clone(),
                observation: Observation::Null,
                reward: 0.0,
                event: StepEvent::None,
            }
        }
        fn observation_log_likelihood(&self, _o: &Observation, next: &State, _a: PrimitiveAction) -> f64 {
            next.values[1].ln()
        }
        fn sample_initial_state(&self, _rng: &mut SimRng) -> State {
            State::new(vec![0.0, 1.0])
        }
        fn initial_belief(&self, n: usize, _rng: &mut SimRng) -> ParticleBelief {
            ParticleBelief::point_mass(State::new(vec![0.0, 1.0]), n)
        }
    }

    fn particles(likelihoods: &[f64]) -> ParticleBelief {
        ParticleBelief::uniform(
            likelihoods
                .iter()
                .enumerate()
                .map(|(i, l)| State::new(vec![i as f64, *l]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn likelihood_normalization() {
        let b = particles(&[0.9, 0.1]);
        let w = reweight(&b.weights(), b.states(), PrimitiveAction(0), &Observation::Null, &Scripted)
            .unwrap();
        assert!((w[0] - 0.9).abs() < 1e-12 && (w[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn uniform_likelihood_keeps_weights() {
        let b = particles(&[1.0, 1.0, 1.0]);
        let w = reweight(&b.weights(), b.states(), PrimitiveAction(0), &Observation::Null, &Scripted)
            .unwrap();
        for x in w {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn collapse_reinvigorates() {
        let b = particles(&[0.0, 0.0]);
        let mut rng = rng_from_seed(1);
        let out = belief_update(&b, PrimitiveAction(0), &Observation::Null, &Scripted, 5, &mut rng);
        assert!(out.collapsed);
        assert_eq!(out.belief.len(), 5);
    }

    #[test]
    fn systematic_resampling_preserves_uniform_multiset() {
        let b = particles(&[1.0, 1.0, 1.0, 1.0]);
        let mut rng = rng_from_seed(3);
        let r = b.resample(4, &mut rng);
        let mut xs: Vec<f64> = r.states().iter().map(|s| s.values[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn weighted_sampling_follows_weights() {
        let states = vec![State::new(vec![0.0]), State::new(vec![1.0])];
        let b = ParticleBelief::weighted(states, vec![3.0, 1.0]).unwrap();
        let mut rng = rng_from_seed(9);
        let n = 40_000;
        let ones = (0..n).filter(|_| b.sample(&mut rng).values[0] == 1.0).count();
        let freq = ones as f64 / n as f64;
        let se = (0.25 * 0.75 / n as f64).sqrt();
        assert!((freq - 0.25).abs() < 4.0 * se, "{freq}");
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let r = ParticleBelief::uniform(vec![State::new(vec![0.0]), State::new(vec![0.0, 1.0])]);
        assert!(r.is_err());
        assert!(ParticleBelief::uniform(vec![]).is_err());
    }
}
