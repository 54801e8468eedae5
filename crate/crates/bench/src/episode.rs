//! Closed-loop episodes: plan, execute, filter, repeat.

use std::time::{Duration, Instant};

use refpomdp::baselines::{bvamp_step, pomcp_plan, reward_span, rpomcp_plan, FrozenMacros, LeafEvaluation, UctParams};
use refpomdp::belief::{belief_update, ParticleBelief};
use refpomdp::envs::{EnvInstance, EnvKind, Scenario};
use refpomdp::reference::{build_heuristic, build_reference, ReferenceConfig, ReferencePolicy, ValueHeuristic};
use refpomdp::refsolver::{choose_root_action, Planner, SearchTree, SolverConfig};
use refpomdp::subgoals::HeuristicMode;
use refpomdp::{
    rng_from_seed, Environment, Error, MacroAction, MacroObservation, Observation, PrimitiveAction, SimRng, SolverParams,
    State, StepEvent,
};
use serde::{Deserialize, Serialize};

use crate::config::{EpisodeConfig, SolverKind};
use crate::error::Result;

/// Offset separating the planner's random stream from the world's.
const PLANNER_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// One row of `episodes.csv`. Wall time is kept out of the CSV so that
/// replays compare byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub env: EnvKind,
    pub solver: SolverKind,
    pub heuristic: HeuristicMode,
    pub epsilon: f64,
    pub seed: u64,
    pub success: bool,
    /// Entered a danger zone.
    pub failure: bool,
    /// The planner completed no simulation in some cycle; the episode stopped there.
    pub starved: bool,
    pub total_reward: f64,
    pub primitive_steps: usize,
    pub planning_cycles: usize,
    pub simulations: u64,
    pub sbmp_calls: u64,
    pub sbmp_failures: u64,
    pub sbmp_failure_rate: f64,
    pub filter_collapses: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Ground-truth states visited, starting with the initial one, plus one
/// [`TraceStep`] per executed primitive.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub states: Vec<Vec<f64>>,
    pub steps: Vec<TraceStep>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub cycle: usize,
    pub action: PrimitiveAction,
    pub observation: Observation,
    pub reward: f64,
    pub state: Vec<f64>,
    pub belief_mean: Vec<f64>,
    /// Root-mean-square particle distance from the mean.
    pub belief_spread: f64,
}

fn spread(b: &ParticleBelief, mean: &[f64]) -> f64 {
    b.iter()
        .map(|(s, w)| w * s.values.iter().zip(mean).map(|(a, m)| (a - m) * (a - m)).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Debug)]
pub struct EpisodeResult {
    pub record: EpisodeRecord,
    pub trace: Option<Trace>,
    /// Planning time of each cycle.
    pub cycle_times: Vec<Duration>,
}

enum Solver {
    Ref {
        reference: Box<dyn ReferencePolicy>,
        heuristic: Box<dyn ValueHeuristic>,
        config: SolverConfig,
    },
    Pomcp(UctParams),
    RPomcp {
        reference: Box<dyn ReferencePolicy>,
        params: UctParams,
    },
    BVamp(Box<dyn ReferencePolicy>),
}

#[derive(Default)]
struct Counters {
    simulations: u64,
    sbmp_calls: u64,
    sbmp_failures: u64,
}

fn uct_params(scenario: &Scenario, cfg: &EpisodeConfig) -> UctParams {
    let r = &scenario.rewards;
    UctParams {
        c: cfg.uct_c.unwrap_or_else(|| reward_span(r.goal, r.danger, r.step)),
        rollout_depth: cfg.rollout_depth,
        gamma: cfg.gamma,
        obs_resolution: cfg.obs_resolution,
    }
}

impl Solver {
    fn build(env: &EnvInstance, cfg: &EpisodeConfig) -> Self {
        let ref_config = ReferenceConfig {
            mode: cfg.heuristic,
            epsilon: cfg.epsilon,
            max_macro_len: cfg.max_macro_len,
            ..ReferenceConfig::default()
        };
        match cfg.solver {
            SolverKind::Nop | SolverKind::RefBasic => {
                let basic = cfg.solver == SolverKind::RefBasic;
                Solver::Ref {
                    reference: build_reference(env, &ref_config, basic),
                    heuristic: build_heuristic(env, cfg.gamma, &ref_config),
                    config: SolverConfig {
                        params: SolverParams {
                            gamma: cfg.gamma,
                            eta: cfg.eta,
                            max_depth: cfg.max_depth,
                            budget: cfg.budget,
                            particle_count: cfg.particles,
                            obs_resolution: cfg.obs_resolution,
                            max_macro_len: if basic { 1 } else { cfg.max_macro_len },
                        },
                        sample_root_action: cfg.sample_root_action,
                        subtree_reuse: cfg.subtree_reuse,
                        sbmp_retries: cfg.sbmp_retries,
                        record: false,
                    },
                }
            }
            SolverKind::Pomcp => Solver::Pomcp(uct_params(env.scenario(), cfg)),
            SolverKind::RPomcp => Solver::RPomcp {
                reference: build_reference(env, &ref_config, false),
                params: uct_params(env.scenario(), cfg),
            },
            SolverKind::BVamp => Solver::BVamp(build_reference(env, &ref_config, false)),
        }
    }
}

/// Root edge of `tree` carrying `m`.
fn root_edge(tree: &SearchTree, m: &MacroAction) -> Option<usize> {
    tree.root().edges.iter().copied().find(|e| tree.edge(*e).macro_action == *m)
}

/// Runs one episode of `scenario` under `cfg`; fully determined by `seed`
/// when the budget counts simulations.
pub fn run_episode(scenario: &Scenario, cfg: &EpisodeConfig, seed: u64) -> Result<EpisodeResult> {
    let started = Instant::now();
    let env = EnvInstance::from_scenario(scenario.clone())?;
    let limits = scenario.limits.clone();
    let mut world = rng_from_seed(seed);
    let mut prng = rng_from_seed(seed ^ PLANNER_STREAM);
    let mut truth: State = env.sample_initial_state(&mut world);
    let mut belief: ParticleBelief = env.initial_belief(cfg.particles, &mut world);
    let solver = Solver::build(&env, cfg);

    let mut trace = cfg.trace.then(|| Trace {
        states: vec![truth.values.clone()],
        steps: Vec::new(),
    });
    let mut counters = Counters::default();
    let mut kept: Option<SearchTree> = None;
    let mut cycle_times = Vec::new();
    let (mut success, mut failure, mut starved) = (false, false, false);
    let mut total_reward = 0.0;
    let (mut steps, mut cycles, mut collapses) = (0usize, 0usize, 0usize);

    while !truth.terminal && steps < limits.max_primitive_steps && cycles < limits.max_planning_cycles {
        let t0 = Instant::now();
        let planned = plan_cycle(&solver, &env, cfg, &belief, kept.take(), &mut prng, &mut counters);
        cycle_times.push(t0.elapsed());
        cycles += 1;
        let (macro_action, tree) = match planned {
            Ok(p) => p,
            Err(Error::PlannerStarved) => {
                starved = true;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let todo = if cfg.replan_every_step {
            &macro_action.actions()[..1]
        } else {
            macro_action.actions()
        };
        let mut keys = Vec::with_capacity(todo.len());
        for &a in todo {
            let step = env.step(&truth, a, &mut world);
            total_reward += step.reward;
            steps += 1;
            match step.event {
                StepEvent::Success => success = true,
                StepEvent::Failure => failure = true,
                StepEvent::None => {}
            }
            keys.push(step.observation.key(cfg.obs_resolution));
            let update = belief_update(&belief, a, &step.observation, &env, cfg.particles, &mut world);
            collapses += update.collapsed as usize;
            belief = update.belief;
            if let Some(t) = trace.as_mut() {
                let mean = belief.mean();
                t.states.push(step.state.values.clone());
                t.steps.push(TraceStep {
                    cycle: cycles - 1,
                    action: a,
                    observation: step.observation.clone(),
                    reward: step.reward,
                    state: step.state.values.clone(),
                    belief_spread: spread(&belief, &mean),
                    belief_mean: mean,
                });
            }
            truth = step.state;
            if truth.terminal || steps >= limits.max_primitive_steps {
                break;
            }
        }
        if cfg.subtree_reuse && !truth.terminal && keys.len() == macro_action.len() {
            if let Some(tree) = tree {
                kept = root_edge(&tree, &macro_action)
                    .and_then(|e| tree.reroot(e, &MacroObservation(keys), belief.clone()));
            }
        }
    }

    let record = EpisodeRecord {
        env: scenario.kind,
        solver: cfg.solver,
        heuristic: cfg.heuristic,
        epsilon: cfg.epsilon,
        seed,
        success,
        failure,
        starved,
        total_reward,
        primitive_steps: steps,
        planning_cycles: cycles,
        simulations: counters.simulations,
        sbmp_calls: counters.sbmp_calls,
        sbmp_failures: counters.sbmp_failures,
        sbmp_failure_rate: if counters.sbmp_calls > 0 {
            counters.sbmp_failures as f64 / counters.sbmp_calls as f64
        } else {
            0.0
        },
        filter_collapses: collapses,
        wall_time: started.elapsed(),
    };
    Ok(EpisodeResult {
        record,
        trace,
        cycle_times,
    })
}

/// One planning cycle; the search tree is returned for refsolver runs so it
/// can be reused.
fn plan_cycle(
    solver: &Solver,
    env: &EnvInstance,
    cfg: &EpisodeConfig,
    belief: &ParticleBelief,
    kept: Option<SearchTree>,
    rng: &mut SimRng,
    counters: &mut Counters,
) -> refpomdp::Result<(MacroAction, Option<SearchTree>)> {
    match solver {
        Solver::Ref {
            reference,
            heuristic,
            config,
        } => {
            let planner = Planner::new(env, reference.as_ref(), heuristic.as_ref(), config);
            let tree = match kept {
                Some(t) => planner.search(t, config.params.budget, rng)?,
                None => planner.plan(belief, rng)?,
            };
            counters.simulations += tree.stats.simulations;
            counters.sbmp_calls += tree.stats.sbmp_calls;
            counters.sbmp_failures += tree.stats.sbmp_failures;
            let m = match choose_root_action(&tree, config, rng) {
                Ok(m) => m,
                // Every simulation absorbed at the root: nothing to prefer.
                Err(Error::NoRootActions) => reference.fallback(rng),
                Err(e) => return Err(e),
            };
            Ok((m, Some(tree)))
        }
        Solver::Pomcp(params) => {
            let a = pomcp_plan(belief, env, params, cfg.budget, rng)?;
            Ok((MacroAction::single(a), None))
        }
        Solver::RPomcp { reference, params } => {
            let macros = FrozenMacros {
                reference: reference.as_ref(),
                k: cfg.k,
                retries: cfg.sbmp_retries,
                max_macro_len: cfg.max_macro_len,
            };
            let m = rpomcp_plan(belief, env, &macros, LeafEvaluation::Rollout, params, cfg.budget, rng)?;
            Ok((m, None))
        }
        Solver::BVamp(reference) => {
            let m = bvamp_step(belief, reference.as_ref(), cfg.sbmp_retries, cfg.max_macro_len, rng)?;
            Ok((m, None))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use refpomdp::envs::{lightdark_scenario_with, maze2d_scenario};
    use refpomdp::Budget;

    #[test]
    fn replay_is_identical() {
        let sc = lightdark_scenario_with([1.25, 1.25], [5.25, 1.25], 0.25);
        let mut cfg = EpisodeConfig::for_env(EnvKind::LightDark, SolverKind::Nop);
        cfg.budget = Budget::Simulations(30);
        cfg.particles = 50;
        let a = run_episode(&sc, &cfg, 7).unwrap().record;
        let b = run_episode(&sc, &cfg, 7).unwrap().record;
        assert_eq!(
            EpisodeRecord {
                wall_time: Duration::ZERO,
                ..a
            },
            EpisodeRecord {
                wall_time: Duration::ZERO,
                ..b
            }
        );
    }

    #[test]
    fn step_cap_costs_step_reward_each_step() {
        // Nowhere near the goal in 20 steps.
        let mut sc = maze2d_scenario();
        sc.limits.max_primitive_steps = 20;
        let mut cfg = EpisodeConfig::for_env(EnvKind::Maze2d, SolverKind::BVamp);
        cfg.particles = 20;
        let r = run_episode(&sc, &cfg, 1).unwrap().record;
        assert!(!r.success);
        if !r.failure {
            assert_eq!(r.primitive_steps, 20);
            assert!((r.total_reward + 2.0).abs() < 1e-9);
        }
    }
}
