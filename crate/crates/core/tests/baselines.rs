use refpomdp::baselines::{
    bvamp_step, pomcp_search, rpomcp_search, FrozenMacros, LeafEvaluation, UctParams, DEFAULT_K,
};
use refpomdp::belief::ParticleBelief;
use refpomdp::envs::{lightdark_scenario, lightdark_scenario_with, EnvInstance, TwoStatePomdp};
use refpomdp::reference::{build_reference, ReferenceConfig, SbmpReference};
use refpomdp::sbmp::EAST;
use refpomdp::subgoals::HeuristicMode;
use refpomdp::{rng_from_seed, Budget, Environment, State};

/// Exact two-step optimum `max_a [R(b,a) + γ·Σ_o P(o|b,a)·max_a' R(b_ao, a')]`.
fn two_step_optimum(p: &TwoStatePomdp, b1: f64, gamma: f64) -> f64 {
    let immediate = |b1: f64, a: usize| (1.0 - b1) * p.rewards[0][a] + b1 * p.rewards[1][a];
    (0..2)
        .map(|a| {
            let b = [1.0 - b1, b1];
            let predicted: Vec<f64> = (0..2)
                .map(|n| (0..2).map(|s| b[s] * p.transition(s, a, n)).sum())
                .collect();
            let future: f64 = (0..2)
                .map(|o| {
                    let j: Vec<f64> = (0..2).map(|n| predicted[n] * p.observation(n, o)).collect();
                    let p_o = j[0] + j[1];
                    let post = j[1] / p_o;
                    p_o * immediate(post, 0).max(immediate(post, 1))
                })
                .sum();
            immediate(b1, a) + gamma * future
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn pomcp_converges_on_a_two_step_problem() {
    let p = TwoStatePomdp::default();
    let params = UctParams {
        c: 0.5,
        rollout_depth: 2,
        gamma: 0.95,
        obs_resolution: 1.0,
    };
    let mut rng = rng_from_seed(4);
    let belief = p.initial_belief(1000, &mut rng);
    let tree = pomcp_search(&belief, &p, &params, Budget::Simulations(100_000), &mut rng).unwrap();
    let best = tree
        .root()
        .actions
        .iter()
        .map(|a| a.q)
        .fold(f64::NEG_INFINITY, f64::max);
    let exact = two_step_optimum(&p, 0.5, 0.95);
    assert!(((best - exact) / exact).abs() < 0.05, "pomcp {best} vs exact {exact}");
}

fn lightdark_setup(seed: u64) -> (EnvInstance, Box<dyn refpomdp::reference::ReferencePolicy>, ParticleBelief) {
    let env = EnvInstance::from_scenario(lightdark_scenario(seed).unwrap()).unwrap();
    let rc = ReferenceConfig {
        max_macro_len: 4,
        ..ReferenceConfig::default()
    };
    let reference = build_reference(&env, &rc, false);
    let mut rng = rng_from_seed(seed);
    let belief = env.initial_belief(100, &mut rng);
    (env, reference, belief)
}

#[test]
fn rpomcp_expands_each_node_once_with_k_children() {
    let (env, reference, belief) = lightdark_setup(3);
    let params = UctParams {
        rollout_depth: 30,
        ..UctParams::default()
    };
    for k in [1, DEFAULT_K] {
        let macros = FrozenMacros {
            reference: reference.as_ref(),
            k,
            retries: 3,
            max_macro_len: 4,
        };
        let mut rng = rng_from_seed(9);
        let tree = rpomcp_search(
            &belief,
            &env,
            &macros,
            LeafEvaluation::Rollout,
            &params,
            Budget::Simulations(500),
            &mut rng,
        )
        .unwrap();
        assert_eq!(tree.root().actions.len(), k);
        assert_eq!(tree.root().n, 500);
        let mut expanded = 0;
        for node in &tree.nodes {
            assert!(node.expansions <= 1, "a node was re-expanded");
            if node.expansions == 1 {
                expanded += 1;
                assert_eq!(node.actions.len(), k);
            }
        }
        assert!(expanded > 1);
        if k == 1 {
            assert_eq!(tree.root().actions[0].n, 500);
        }
    }
}

#[test]
fn bvamp_walks_straight_to_a_visible_goal() {
    let sc = lightdark_scenario_with([1.0, 4.0], [7.0, 4.0], 4.0);
    let reference = SbmpReference::new(
        &sc,
        ReferenceConfig {
            mode: HeuristicMode::Uniform,
            goal_prob: 1.0,
            max_macro_len: 100,
            ..ReferenceConfig::default()
        },
    );
    let belief = ParticleBelief::point_mass(State::new(vec![1.0, 4.0]), 10);
    let mut rng = rng_from_seed(1);
    let m = bvamp_step(&belief, &reference, 3, 100, &mut rng).unwrap();
    assert_eq!(m.actions(), &[EAST; 12]);
}
