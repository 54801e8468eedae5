//! Multi-drone teleporting tag: four drones chase an evasive target that
//! wraps around the map edges. The joint state stacks the drone positions
//! followed by the target position.

use rand::Rng;
use rand_distr::StandardNormal;

use super::scenario::{EnvKind, EpisodeLimits, NoiseParams, RewardSchedule, Scenario, TagParams};
use crate::belief::ParticleBelief;
use crate::error::{Error, Result};
use crate::model::{Environment, Observation, PrimitiveAction, SimRng, State, Step, StepEvent};
use crate::sbmp::{Bounds, CardinalActions, Shape, Workspace};
use crate::subgoals::{DRONES, DRONE_DIM};

pub const SIZE: f64 = 30.0;
pub const HEIGHT: f64 = 4.0;
pub const STEP: f64 = 0.5;
pub const MOVES: usize = 6;
pub const JOINT_DIM: usize = (DRONES + 1) * DRONE_DIM;

/// The tag scenario: four pillars, drones launched from the map center.
pub fn dronetag_scenario() -> Scenario {
    let bounds = Bounds::new(vec![0.0, 0.0, 0.0], vec![SIZE, SIZE, HEIGHT]);
    let pillars = [(7.5, 7.5), (22.5, 7.5), (7.5, 22.5), (22.5, 22.5)]
        .iter()
        .map(|(x, y)| Shape::aabb(&[x - 1.0, y - 1.0, 0.0], &[x + 1.0, y + 1.0, HEIGHT]))
        .collect();
    let center = vec![15.0, 15.0, 2.0];
    Scenario {
        kind: EnvKind::DroneTag,
        workspace: Workspace::new(bounds, pillars).expect("static layout"),
        landmarks: vec![],
        danger_zones: vec![],
        spawns: vec![center; DRONES],
        goals: vec![],
        rewards: RewardSchedule {
            step: -0.1,
            goal: 500.0,
            danger: 0.0,
        },
        step_size: STEP,
        noise: NoiseParams {
            slip: 0.0,
            randomized_slip: false,
            obs_sigma: 0.2,
            light: None,
            initial_sigma: 0.0,
        },
        limits: EpisodeLimits {
            max_primitive_steps: 400,
            max_planning_cycles: 40,
        },
        tag: Some(TagParams {
            drones: DRONES,
            target_detect: 4.0,
            drone_detect: 5.0,
            capture: 1.5,
        }),
        seed: None,
    }
}

/// Packs one cardinal move per drone into a joint action id `Σ mᵢ·6ⁱ`.
pub fn encode_joint(moves: &[PrimitiveAction]) -> PrimitiveAction {
    debug_assert_eq!(moves.len(), DRONES);
    let mut id = 0u16;
    for m in moves.iter().rev() {
        id = id * MOVES as u16 + m.0;
    }
    PrimitiveAction(id)
}

pub fn decode_joint(a: PrimitiveAction) -> [PrimitiveAction; DRONES] {
    let mut id = a.0;
    let mut out = [PrimitiveAction(0); DRONES];
    for m in out.iter_mut() {
        *m = PrimitiveAction(id % MOVES as u16);
        id /= MOVES as u16;
    }
    out
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn drone(values: &[f64], i: usize) -> &[f64] {
    &values[i * DRONE_DIM..(i + 1) * DRONE_DIM]
}

fn target(values: &[f64]) -> &[f64] {
    &values[DRONES * DRONE_DIM..]
}

/// Distance from the target to the nearest drone, and that drone's index.
pub fn closest_drone(values: &[f64]) -> (usize, f64) {
    let t = target(values);
    let mut best = (0, f64::INFINITY);
    for i in 0..DRONES {
        let d = dist(drone(values, i), t);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Target position after a move in `dir`: coordinates leaving the bounds
/// reappear on the opposite side; moves into obstacles leave it in place.
pub fn target_move(world: &Workspace, pos: &[f64], dir: PrimitiveAction) -> Vec<f64> {
    let actions = CardinalActions::new(3);
    let (axis, sign) = actions.direction(dir);
    let b = world.bounds();
    let mut next = pos.to_vec();
    next[axis] += sign * STEP;
    let span = b.hi[axis] - b.lo[axis];
    if next[axis] > b.hi[axis] {
        next[axis] -= span;
    } else if next[axis] < b.lo[axis] {
        next[axis] += span;
    }
    if world.is_valid(&next) {
        next
    } else {
        pos.to_vec()
    }
}

/// Evasive move: the cardinal direction whose outcome is furthest from the
/// drone closest to the target (lowest direction id on ties).
pub fn evasion_direction(world: &Workspace, values: &[f64]) -> PrimitiveAction {
    let (i, _) = closest_drone(values);
    let chaser = drone(values, i);
    let t = target(values);
    let mut best = (PrimitiveAction(0), f64::NEG_INFINITY);
    for m in 0..MOVES as u16 {
        let q = target_move(world, t, PrimitiveAction(m));
        let d = dist(&q, chaser);
        if d > best.1 {
            best = (PrimitiveAction(m), d);
        }
    }
    best.0
}

fn move_drone(world: &Workspace, pos: &[f64], dir: PrimitiveAction) -> Vec<f64> {
    let (axis, sign) = CardinalActions::new(3).direction(dir);
    let mut next = pos.to_vec();
    next[axis] += sign * STEP;
    world.bounds().clamp(&mut next);
    if world.is_valid(&next) {
        next
    } else {
        pos.to_vec()
    }
}

fn tag_params(scenario: &Scenario) -> TagParams {
    scenario.tag.expect("tag scenario")
}

/// One joint step: drones move, capture check, target moves (evading when a
/// drone is within its detection radius, otherwise at random), capture check.
pub fn dronetag_step(s: &State, a: PrimitiveAction, scenario: &Scenario, rng: &mut SimRng) -> Step {
    if s.terminal {
        return Step::absorbed(s);
    }
    let tag = tag_params(scenario);
    let world = &scenario.workspace;
    let moves = decode_joint(a);
    let mut values = Vec::with_capacity(JOINT_DIM);
    for (i, m) in moves.iter().enumerate() {
        values.extend(move_drone(world, drone(&s.values, i), *m));
    }
    values.extend_from_slice(target(&s.values));
    let captured = |v: &[f64]| closest_drone(v).1 <= tag.capture;
    let mut done = captured(&values);
    if !done {
        let dir = if closest_drone(&values).1 <= tag.target_detect {
            evasion_direction(world, &values)
        } else {
            PrimitiveAction(rng.random_range(0..MOVES as u16))
        };
        let t = target_move(world, target(&values), dir);
        values.truncate(DRONES * DRONE_DIM);
        values.extend(t);
        done = captured(&values);
    }
    if done {
        return Step {
            state: State {
                values,
                terminal: true,
            },
            observation: Observation::Terminal,
            reward: scenario.rewards.goal,
            event: StepEvent::Success,
        };
    }
    let observation = if closest_drone(&values).1 <= tag.drone_detect {
        let sigma = scenario.noise.obs_sigma;
        Observation::Reading(
            target(&values)
                .iter()
                .map(|x| x + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        )
    } else {
        Observation::Null
    };
    Step {
        state: State::new(values),
        observation,
        reward: scenario.rewards.step,
        event: StepEvent::None,
    }
}

#[derive(Clone, Debug)]
pub struct DroneTag {
    scenario: Scenario,
}

impl DroneTag {
    pub fn new(scenario: Scenario) -> Result<Self> {
        if scenario.kind != EnvKind::DroneTag || scenario.tag.is_none() {
            return Err(Error::InvalidParameter("not a tag scenario".into()));
        }
        scenario.validate()?;
        if scenario.spawns.len() != DRONES || scenario.dim() != DRONE_DIM {
            return Err(Error::Domain(format!("tag needs {DRONES} spawns in 3-D")));
        }
        Ok(DroneTag { scenario })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn sample_target(&self, rng: &mut SimRng) -> Vec<f64> {
        let tag = tag_params(&self.scenario);
        let world = &self.scenario.workspace;
        let b = world.bounds();
        loop {
            let q: Vec<f64> = (0..DRONE_DIM).map(|d| rng.random_range(b.lo[d]..b.hi[d])).collect();
            let far = self.scenario.spawns.iter().all(|s| dist(s, &q) > tag.drone_detect);
            if far && world.is_valid(&q) {
                return q;
            }
        }
    }

    /// Target for a collapsed particle: near the reading when there is one,
    /// otherwise jittered (with growing spread) until out of every drone's
    /// range, then uniform out of range as a last resort.
    fn consistent_target(&self, p: &State, o: &Observation, rng: &mut SimRng) -> Option<Vec<f64>> {
        let tag = tag_params(&self.scenario);
        let world = &self.scenario.workspace;
        let sensed = |t: &[f64]| {
            let mut v = p.values[..DRONES * DRONE_DIM].to_vec();
            v.extend_from_slice(t);
            closest_drone(&v).1
        };
        let (center, sigmas): (&[f64], Vec<f64>) = match o {
            Observation::Reading(r) => (r, vec![self.scenario.noise.obs_sigma; 8]),
            Observation::Null => (target(&p.values), (0..16).map(|i| 0.5 * f64::from(1 << (i / 4))).collect()),
            Observation::Terminal => return None,
        };
        for sigma in sigmas {
            let t: Vec<f64> = center
                .iter()
                .map(|c| c + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let d = sensed(&t);
            let fits = match o {
                Observation::Reading(_) => d <= tag.drone_detect && d > tag.capture,
                _ => d > tag.drone_detect,
            };
            if fits && world.is_valid(&t) {
                return Some(t);
            }
        }
        if matches!(o, Observation::Null) {
            let b = world.bounds();
            for _ in 0..1000 {
                let t: Vec<f64> = (0..DRONE_DIM).map(|d| rng.random_range(b.lo[d]..b.hi[d])).collect();
                if sensed(&t) > tag.drone_detect && world.is_valid(&t) {
                    return Some(t);
                }
            }
        }
        None
    }

    fn joint(&self, target: Vec<f64>) -> State {
        let mut values: Vec<f64> = self.scenario.spawns.iter().flatten().copied().collect();
        values.extend(target);
        State::new(values)
    }
}

fn gaussian_log_pdf(o: &[f64], q: &[f64], sigma: f64) -> f64 {
    o.iter()
        .zip(q)
        .map(|(a, b)| {
            let z = (a - b) / sigma;
            -0.5 * z * z - sigma.ln() - 0.918_938_533_204_672_8
        })
        .sum()
}

impl Environment for DroneTag {
    fn name(&self) -> &str {
        "dronetag"
    }

    fn state_dim(&self) -> usize {
        JOINT_DIM
    }

    fn num_actions(&self) -> usize {
        MOVES.pow(DRONES as u32)
    }

    fn step(&self, s: &State, a: PrimitiveAction, rng: &mut SimRng) -> Step {
        dronetag_step(s, a, &self.scenario, rng)
    }

    fn observation_log_likelihood(&self, o: &Observation, next: &State, _a: PrimitiveAction) -> f64 {
        let tag = tag_params(&self.scenario);
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
                if closest_drone(&next.values).1 > tag.drone_detect {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Observation::Reading(r) => {
                if closest_drone(&next.values).1 <= tag.drone_detect {
                    gaussian_log_pdf(r, target(&next.values), self.scenario.noise.obs_sigma)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    fn sample_initial_state(&self, rng: &mut SimRng) -> State {
        let t = self.sample_target(rng);
        self.joint(t)
    }

    fn reinvigorate(&self, propagated: &[State], o: &Observation, rng: &mut SimRng) -> Option<Vec<State>> {
        let mut out = Vec::with_capacity(propagated.len());
        for p in propagated.iter().filter(|p| !p.terminal) {
            if let Some(t) = self.consistent_target(p, o, rng) {
                let mut values = p.values[..DRONES * DRONE_DIM].to_vec();
                values.extend(t);
                out.push(State::new(values));
            }
        }
        (!out.is_empty()).then_some(out)
    }

    /// Drones at their spawns; the target uniform over free space out of sensing range.
    fn initial_belief(&self, particles: usize, rng: &mut SimRng) -> ParticleBelief {
        let states = (0..particles.max(1))
            .map(|_| {
                let t = self.sample_target(rng);
                self.joint(t)
            })
            .collect();
        ParticleBelief::uniform(states).expect("at least one particle")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rng_from_seed;
    use crate::sbmp::{EAST, NORTH, WEST};

    fn joint(drones: [[f64; 3]; 4], t: [f64; 3]) -> State {
        let mut v: Vec<f64> = drones.iter().flatten().copied().collect();
        v.extend(t);
        State::new(v)
    }

    #[test]
    fn joint_encoding_round_trips() {
        for id in 0..1296u16 {
            let a = PrimitiveAction(id);
            assert_eq!(encode_joint(&decode_joint(a)), a);
        }
    }

    #[test]
    fn close_drone_captures() {
        let sc = dronetag_scenario();
        let s = joint([[10.0, 10.0, 2.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]], [11.5, 10.0, 2.0]);
        let a = encode_joint(&[EAST, WEST, WEST, WEST]);
        let mut rng = rng_from_seed(0);
        let step = dronetag_step(&s, a, &sc, &mut rng);
        assert_eq!(step.reward, 500.0);
        assert!(step.terminal());
    }

    #[test]
    fn target_evades_the_near_drone() {
        let sc = dronetag_scenario();
        let s = joint([[12.0, 15.0, 2.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]], [15.0, 15.0, 2.0]);
        let a = encode_joint(&[NORTH, NORTH, NORTH, NORTH]);
        let mut rng = rng_from_seed(0);
        let step = dronetag_step(&s, a, &sc, &mut rng);
        assert_eq!(&step.state.values[12..], &[15.5, 15.0, 2.0]);
    }

    #[test]
    fn target_wraps_around() {
        let sc = dronetag_scenario();
        let q = target_move(&sc.workspace, &[29.75, 15.0, 2.0], EAST);
        assert!((q[0] - 0.25).abs() < 1e-12);
        let q = target_move(&sc.workspace, &[15.0, 0.25, 2.0], crate::sbmp::SOUTH);
        assert!((q[1] - 29.75).abs() < 1e-12);
    }

    #[test]
    fn collapsed_particles_are_rebuilt_consistent() {
        let env = DroneTag::new(dronetag_scenario()).unwrap();
        let d = [[15.0, 15.0, 2.0], [15.0, 15.0, 2.0], [15.0, 15.0, 2.0], [15.0, 15.0, 2.0]];
        let mut rng = rng_from_seed(3);
        // Every particle has the target in range, but nothing was sensed.
        let near: Vec<State> = (0..50).map(|_| joint(d, [17.0, 15.0, 2.0])).collect();
        let out = env.reinvigorate(&near, &Observation::Null, &mut rng).unwrap();
        assert_eq!(out.len(), 50);
        for s in &out {
            assert!(env.observation_log_likelihood(&Observation::Null, s, PrimitiveAction(0)).is_finite());
            assert_eq!(&s.values[..12], &near[0].values[..12]);
        }
        // Every particle is out of range, but a reading arrived.
        let far: Vec<State> = (0..50).map(|_| joint(d, [25.0, 15.0, 2.0])).collect();
        let o = Observation::Reading(vec![18.0, 15.0, 2.0]);
        let out = env.reinvigorate(&far, &o, &mut rng).unwrap();
        for s in &out {
            assert!(env.observation_log_likelihood(&o, s, PrimitiveAction(0)).is_finite());
            assert!(dist(target(&s.values), &[18.0, 15.0, 2.0]) < 1.5);
        }
        assert!(env.reinvigorate(&far, &Observation::Terminal, &mut rng).is_none());
    }
}
