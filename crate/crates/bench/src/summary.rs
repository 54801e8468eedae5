//! Per-cell aggregation of episode records.

use refpomdp::envs::EnvKind;
use refpomdp::subgoals::HeuristicMode;
use serde::{Deserialize, Serialize};

use crate::config::SolverKind;
use crate::episode::EpisodeRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub env: EnvKind,
    pub solver: SolverKind,
    pub heuristic: HeuristicMode,
    pub epsilon: f64,
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_reward: f64,
    /// Sample standard deviation over `√n`; zero for a single episode.
    pub stderr_reward: f64,
    pub mean_steps: f64,
    pub mean_cycles: f64,
    pub starved: usize,
    pub sbmp_failure_rate: f64,
}

/// Mean and standard error (sample sd / √n).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn same_cell(a: &EpisodeRecord, b: &EpisodeRecord) -> bool {
    a.env == b.env && a.solver == b.solver && a.heuristic == b.heuristic && a.epsilon == b.epsilon
}

/// One summary per distinct cell, in order of first appearance.
pub fn summarize(records: &[EpisodeRecord]) -> Vec<CellSummary> {
    let mut groups: Vec<Vec<&EpisodeRecord>> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|g| same_cell(g[0], r)) {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    groups.iter().map(|g| summarize_cell(g)).collect()
}

fn summarize_cell(g: &[&EpisodeRecord]) -> CellSummary {
    let n = g.len() as f64;
    let rewards: Vec<f64> = g.iter().map(|r| r.total_reward).collect();
    let (mean_reward, stderr_reward) = mean_stderr(&rewards);
    let calls: u64 = g.iter().map(|r| r.sbmp_calls).sum();
    let failures: u64 = g.iter().map(|r| r.sbmp_failures).sum();
    CellSummary {
        env: g[0].env,
        solver: g[0].solver,
        heuristic: g[0].heuristic,
        epsilon: g[0].epsilon,
        episodes: g.len(),
        success_rate: g.iter().filter(|r| r.success).count() as f64 / n,
        mean_reward,
        stderr_reward,
        mean_steps: g.iter().map(|r| r.primitive_steps as f64).sum::<f64>() / n,
        mean_cycles: g.iter().map(|r| r.planning_cycles as f64).sum::<f64>() / n,
        starved: g.iter().filter(|r| r.starved).count(),
        sbmp_failure_rate: if calls > 0 { failures as f64 / calls as f64 } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_episode_stderr() {
        let (m, se) = mean_stderr(&[10.0, 20.0]);
        assert_eq!(m, 15.0);
        assert!((se - 5.0).abs() < 1e-12);
        assert_eq!(mean_stderr(&[3.0]), (3.0, 0.0));
    }
}
