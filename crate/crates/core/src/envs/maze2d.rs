//! Maze2D: a 50×50 serpentine maze with two aliased spawns, landmark strips
//! that give position readings, danger islands and a goal at the far end.

use super::nav::nav_step;
use super::scenario::{EnvKind, EpisodeLimits, NoiseParams, RewardSchedule, Scenario};
use crate::model::{PrimitiveAction, SimRng, State, Step};
use crate::sbmp::{Bounds, CardinalActions, Shape, Workspace};

pub const SIZE: f64 = 50.0;
pub const STEP: f64 = 1.0;

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Shape {
    Shape::aabb(&[x0, y0], &[x1, y1])
}

/// The fixed Maze2D layout.
///
/// Three walls split the square into four bands joined by gaps at alternating
/// ends. Spawns sit in the first two bands, so the shortest routes share their
/// second half. Each danger island sits on the inner wall a few steps past a
/// gap, and a landmark block covers the gap exit before it. Positions are on a
/// half-integer lattice and never touch the integer-aligned region faces.
pub fn maze2d_scenario() -> Scenario {
    let walls = vec![
        rect(0.0, 10.0, 42.0, 12.0),
        rect(8.0, 24.0, 50.0, 26.0),
        rect(0.0, 37.0, 42.0, 39.0),
    ];
    Scenario {
        kind: EnvKind::Maze2d,
        workspace: Workspace::new(Bounds::new(vec![0.0, 0.0], vec![SIZE, SIZE]), walls)
            .expect("static layout"),
        landmarks: vec![
            rect(8.0, 0.0, 11.0, 10.0),
            rect(40.0, 12.0, 50.0, 17.0),
            rect(24.0, 12.0, 27.0, 24.0),
            rect(0.0, 26.0, 10.0, 30.0),
            rect(24.0, 26.0, 27.0, 37.0),
            rect(40.0, 39.0, 50.0, 44.0),
            rect(20.0, 39.0, 23.0, 50.0),
        ],
        danger_zones: vec![
            rect(32.0, 12.0, 36.0, 16.0),
            rect(14.0, 26.0, 18.0, 30.0),
            rect(30.0, 39.0, 34.0, 43.0),
        ],
        spawns: vec![vec![2.5, 4.5], vec![18.5, 17.5]],
        goals: vec![rect(0.0, 44.0, 6.0, 50.0)],
        rewards: RewardSchedule {
            step: -0.1,
            goal: 800.0,
            danger: -800.0,
        },
        step_size: STEP,
        noise: NoiseParams {
            slip: 0.2,
            randomized_slip: false,
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
    }
}

pub fn maze2d_step(s: &State, a: PrimitiveAction, scenario: &Scenario, rng: &mut SimRng) -> Step {
    debug_assert_eq!(scenario.kind, EnvKind::Maze2d);
    nav_step(scenario, &CardinalActions::new(2), s, a, rng)
}

#[cfg(test)]
mod tests {
    use std::collections::{HashSet, VecDeque};

    use super::*;
    use crate::model::{rng_from_seed, Environment, Observation, StepEvent};
    use crate::sbmp::{EAST, NORTH};

    /// Shortest number of unit moves from `start` to the goal avoiding walls
    /// and danger zones, by breadth-first search on the step lattice.
    fn lattice_distance(sc: &Scenario, start: &[f64]) -> Option<usize> {
        let key = |q: &[f64]| ((q[0] * 2.0) as i64, (q[1] * 2.0) as i64);
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(key(start));
        queue.push_back((start.to_vec(), 0usize));
        while let Some((q, d)) = queue.pop_front() {
            if sc.in_goal(&q) {
                return Some(d);
            }
            for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                let n = vec![q[0] + dx, q[1] + dy];
                if sc.workspace.is_valid(&n) && !sc.in_danger(&n) && seen.insert(key(&n)) {
                    queue.push_back((n, d + 1));
                }
            }
        }
        None
    }

    #[test]
    fn layout_is_valid_and_long() {
        let sc = maze2d_scenario();
        sc.validate().unwrap();
        for s in &sc.spawns {
            let d = lattice_distance(&sc, s).expect("goal reachable");
            assert!(d >= 100, "spawn {s:?} only {d} steps from the goal");
        }
    }

    #[test]
    fn blocked_move_stays() {
        let sc = maze2d_scenario();
        let mut rng = rng_from_seed(4);
        let s = State::new(vec![20.5, 9.5]);
        // The wall above blocks every northward move; slips go sideways.
        for _ in 0..50 {
            let step = maze2d_step(&s, NORTH, &sc, &mut rng);
            assert!(step.state.values == s.values || step.state.values[1] == 9.5);
        }
    }

    #[test]
    fn danger_entry_terminates() {
        let sc = maze2d_scenario();
        let s = State::new(vec![30.5, 14.5]);
        let mut hit = false;
        let mut rng = rng_from_seed(1);
        for _ in 0..20 {
            let step = maze2d_step(&s, EAST, &sc, &mut rng);
            if step.state.values[0] > 31.0 {
                assert_eq!(step.event, StepEvent::None);
                let next = maze2d_step(&step.state, EAST, &sc, &mut rng);
                if next.state.values[0] > 32.0 {
                    assert_eq!(next.reward, -800.0);
                    assert!(next.terminal());
                    hit = true;
                }
            }
        }
        assert!(hit);
    }

    #[test]
    fn collapse_rebuilds_lattice_particles_at_the_reading() {
        let env = crate::envs::EnvInstance::from_scenario(maze2d_scenario()).unwrap();
        let o = Observation::Reading(vec![9.53, 4.48]);
        let a = crate::model::PrimitiveAction(0);
        // A reading more than five sigma away rules a particle out.
        assert!(env.observation_log_likelihood(&o, &State::new(vec![9.5, 4.5]), a).is_finite());
        assert_eq!(env.observation_log_likelihood(&o, &State::new(vec![10.5, 4.5]), a), f64::NEG_INFINITY);
        let stuck = vec![State::new(vec![2.5, 4.5]); 40];
        let mut rng = rng_from_seed(6);
        let out = env.reinvigorate(&stuck, &o, &mut rng).unwrap();
        assert_eq!(out.len(), 40);
        assert!(out.iter().all(|s| s.values == [9.5, 4.5]));
        assert!(env.reinvigorate(&stuck, &Observation::Null, &mut rng).is_none());
    }
}
