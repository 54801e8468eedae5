use refpomdp::envs::{
    dronetag_scenario, dronetag_step, encode_joint, maze2d_scenario, maze2d_step, random3d_generate, realized_action,
    target_move, RegionCounts,
};
use refpomdp::sbmp::{CardinalActions, DOWN, EAST, NORTH, SOUTH, UP, WEST};
use refpomdp::{rng_from_seed, State, StepEvent};

const SAMPLES: usize = 100_000;

fn within_three_sigma(count: usize, p: f64) -> bool {
    let n = SAMPLES as f64;
    let sigma = (n * p * (1.0 - p)).sqrt();
    (count as f64 - n * p).abs() <= 3.0 * sigma
}

#[test]
fn maze2d_slip_frequencies() {
    let sc = maze2d_scenario();
    let mut rng = rng_from_seed(2024);
    // Open floor of the first band, at least two steps from any wall.
    let s = State::new(vec![20.5, 5.5]);
    let (mut east, mut north, mut south) = (0, 0, 0);
    for _ in 0..SAMPLES {
        let next = maze2d_step(&s, EAST, &sc, &mut rng).state.values;
        match (next[0] - s.values[0], next[1] - s.values[1]) {
            (dx, dy) if dx == 1.0 && dy == 0.0 => east += 1,
            (dx, dy) if dx == 0.0 && dy == 1.0 => north += 1,
            (dx, dy) if dx == 0.0 && dy == -1.0 => south += 1,
            other => panic!("unexpected displacement {other:?}"),
        }
    }
    assert!(within_three_sigma(east, 0.8), "east {east}");
    assert!(within_three_sigma(north, 0.1), "north {north}");
    assert!(within_three_sigma(south, 0.1), "south {south}");
}

#[test]
fn random3d_slip_frequencies() {
    // Intended 0.8; the 0.2 error mass is spread uniformly over the four
    // directions orthogonal to the intended axis.
    let sc = random3d_generate(3, RegionCounts::variant(0), None).unwrap();
    let actions = CardinalActions::new(3);
    let mut rng = rng_from_seed(77);
    for intended in [EAST, UP] {
        let mut counts = [0usize; 6];
        for _ in 0..SAMPLES {
            counts[realized_action(&sc, &actions, intended, &mut rng).0 as usize] += 1;
        }
        let ortho = actions.orthogonal(intended);
        assert_eq!(ortho.len(), 4);
        assert!(within_three_sigma(counts[intended.0 as usize], 0.8), "{intended:?}: {counts:?}");
        for o in &ortho {
            assert!(within_three_sigma(counts[o.0 as usize], 0.05), "{intended:?}: {counts:?}");
        }
        let errors: usize = ortho.iter().map(|o| counts[o.0 as usize]).sum();
        assert!(within_three_sigma(errors, 0.2), "{intended:?}: {counts:?}");
        assert_eq!(counts[intended.0 as usize] + errors, SAMPLES);
    }
}

fn tag_state(drones: [[f64; 3]; 4], target: [f64; 3]) -> State {
    State::new(drones.iter().flatten().chain(target.iter()).copied().collect())
}

#[test]
fn target_teleports_to_the_mirrored_edge() {
    let world = dronetag_scenario().workspace;
    // Crossing an edge by half a step reappears half a step inside the other.
    assert_eq!(target_move(&world, &[29.75, 15.0, 2.0], EAST), vec![0.25, 15.0, 2.0]);
    assert_eq!(target_move(&world, &[0.25, 15.0, 2.0], WEST), vec![29.75, 15.0, 2.0]);
    assert_eq!(target_move(&world, &[15.0, 29.75, 2.0], NORTH), vec![15.0, 0.25, 2.0]);
    assert_eq!(target_move(&world, &[15.0, 0.25, 2.0], SOUTH), vec![15.0, 29.75, 2.0]);
    assert_eq!(target_move(&world, &[15.0, 15.0, 3.75], UP), vec![15.0, 15.0, 0.25]);
    assert_eq!(target_move(&world, &[15.0, 15.0, 0.25], DOWN), vec![15.0, 15.0, 3.75]);
    // Landing exactly on the boundary is inside; no wrap.
    assert_eq!(target_move(&world, &[29.5, 15.0, 2.0], EAST), vec![30.0, 15.0, 2.0]);
    // Moving into a pillar leaves the target in place.
    assert_eq!(target_move(&world, &[6.25, 7.5, 2.0], EAST), vec![6.25, 7.5, 2.0]);
}

#[test]
fn capture_radius_is_inclusive() {
    let sc = dronetag_scenario();
    let far = [15.0, 15.0, 2.0];
    let other = NORTH;
    // Drone 0 moves east to x = 10.5; the target sits 1.5 away.
    let a = encode_joint(&[EAST, other, other, other]);
    let mut rng = rng_from_seed(1);
    let s = tag_state([[10.0, 10.0, 2.0], far, far, far], [12.0, 10.0, 2.0]);
    let step = dronetag_step(&s, a, &sc, &mut rng);
    assert_eq!(step.event, StepEvent::Success);
    assert!(step.state.terminal);
    assert_eq!(step.reward, 500.0);

    // A hair outside: no capture before the target moves, and the evasive
    // move increases the gap.
    let s = tag_state([[10.0, 10.0, 2.0], far, far, far], [12.0 + 1e-9, 10.0, 2.0]);
    let step = dronetag_step(&s, a, &sc, &mut rng);
    assert_eq!(step.event, StepEvent::None);
    assert!(!step.state.terminal);
    assert_eq!(step.reward, -0.1);
}

#[test]
fn drones_are_clamped_not_wrapped() {
    let sc = dronetag_scenario();
    let far = [15.0, 15.0, 2.0];
    let other = NORTH;
    let mut rng = rng_from_seed(5);
    let s = tag_state([[29.8, 3.0, 2.0], far, far, far], [3.0, 27.0, 2.0]);
    let step = dronetag_step(&s, encode_joint(&[EAST, other, other, other]), &sc, &mut rng);
    assert_eq!(&step.state.values[..3], &[30.0, 3.0, 2.0]);
}
