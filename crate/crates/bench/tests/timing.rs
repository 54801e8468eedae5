//! Kept in its own binary so no other test competes for the CPU.

use std::time::Duration;

use refpomdp::envs::{lightdark_scenario, EnvKind};
use refpomdp::Budget;
use refpomdp_bench::{run_episode, EpisodeConfig, SolverKind};

#[test]
fn planning_cycles_respect_the_wall_clock_budget() {
    let budget = Duration::from_millis(50);
    let mut times = Vec::new();
    for seed in 0..3 {
        let cfg = EpisodeConfig {
            budget: Budget::Time(budget),
            ..EpisodeConfig::for_env(EnvKind::LightDark, SolverKind::Nop)
        };
        times.extend(run_episode(&lightdark_scenario(seed).unwrap(), &cfg, seed).unwrap().cycle_times);
    }
    times.sort();
    let limit = budget.mul_f64(1.1);
    let mean = times.iter().sum::<Duration>() / times.len() as u32;
    let p90 = times[times.len() * 9 / 10];
    eprintln!("cycles {} mean {mean:?} p90 {p90:?} max {:?}", times.len(), times.last().unwrap());
    assert!(mean <= limit, "mean {mean:?}");
    assert!(p90 <= limit, "p90 {p90:?}");
}
