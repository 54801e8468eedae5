//! Benchmark and per-episode configuration.
//!
//! A benchmark config is a JSON object with the CLI's keys; every list-valued
//! key also accepts a scalar. The grid of cells is env × solver × heuristic ×
//! epsilon, each run for `episodes` seeds starting at `seed`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use refpomdp::envs::{EnvKind, Scenario};
use refpomdp::subgoals::HeuristicMode;
use refpomdp::Budget;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Nop,
    RefBasic,
    Pomcp,
    RPomcp,
    BVamp,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Nop,
        SolverKind::RefBasic,
        SolverKind::Pomcp,
        SolverKind::RPomcp,
        SolverKind::BVamp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Nop => "nop",
            SolverKind::RefBasic => "ref-basic",
            SolverKind::Pomcp => "pomcp",
            SolverKind::RPomcp => "r-pomcp",
            SolverKind::BVamp => "b-vamp",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown solver '{s}'")))
    }
}

/// Everything needed to run one episode besides the scenario and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub solver: SolverKind,
    pub heuristic: HeuristicMode,
    pub epsilon: f64,
    pub budget: Budget,
    pub gamma: f64,
    pub eta: f64,
    pub max_depth: usize,
    pub particles: usize,
    pub obs_resolution: f64,
    pub max_macro_len: usize,
    pub sbmp_retries: usize,
    /// R-POMCP macros per node.
    pub k: usize,
    /// UCB1 constant; `None` uses the scenario's reward span.
    pub uct_c: Option<f64>,
    pub rollout_depth: usize,
    /// Execute only the first primitive of each planned macro.
    pub replan_every_step: bool,
    pub subtree_reuse: bool,
    pub sample_root_action: bool,
    /// Record a per-step trace.
    pub trace: bool,
}

impl EpisodeConfig {
    /// Defaults tuned per environment.
    pub fn for_env(kind: EnvKind, solver: SolverKind) -> Self {
        let (max_depth, particles, max_macro_len, obs_resolution) = match kind {
            EnvKind::LightDark => (3, 300, 4, 0.5),
            EnvKind::Maze2d => (3, 300, 4, 1.0),
            EnvKind::Random3d => (3, 300, 4, 1.0),
            EnvKind::DroneTag => (3, 1000, 12, 1.0),
        };
        let mut cfg = EpisodeConfig {
            solver,
            heuristic: HeuristicMode::Uniform,
            epsilon: 0.0,
            budget: Budget::millis(1000),
            gamma: 0.99,
            eta: 0.2,
            max_depth,
            particles,
            obs_resolution,
            max_macro_len,
            sbmp_retries: 3,
            k: refpomdp::baselines::DEFAULT_K,
            uct_c: None,
            rollout_depth: 100,
            replan_every_step: false,
            subtree_reuse: false,
            sample_root_action: false,
            trace: false,
        };
        if solver == SolverKind::RefBasic {
            cfg.max_macro_len = 1;
        }
        cfg
    }
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

fn default_heuristics() -> Vec<HeuristicMode> {
    vec![HeuristicMode::Uniform]
}

fn default_epsilons() -> Vec<f64> {
    vec![0.0]
}

fn default_episodes() -> usize {
    30
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub env: Vec<EnvKind>,
    #[serde(deserialize_with = "one_or_many")]
    pub solver: Vec<SolverKind>,
    #[serde(default = "default_heuristics", deserialize_with = "one_or_many")]
    pub heuristic: Vec<HeuristicMode>,
    #[serde(default = "default_epsilons", deserialize_with = "one_or_many")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan_time_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan_sims: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    /// Fixed scenario file; otherwise each episode draws its default scenario from its seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Write `traj_<seed>.svg` per episode.
    #[serde(default)]
    pub svg: bool,
    /// Write `trace_<seed>.jsonl` per episode.
    #[serde(default)]
    pub trace: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_macro_len: Option<usize>,
    /// R-POMCP macros per node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uct_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replan_every_step: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtree_reuse: Option<bool>,
}

/// One grid point of a benchmark.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub env: EnvKind,
    pub solver: SolverKind,
    pub heuristic: HeuristicMode,
    pub epsilon: f64,
}

impl BenchConfig {
    pub fn new(env: EnvKind, solver: SolverKind) -> Self {
        BenchConfig {
            env: vec![env],
            solver: vec![solver],
            heuristic: default_heuristics(),
            epsilon: default_epsilons(),
            episodes: default_episodes(),
            plan_time_ms: None,
            plan_sims: None,
            seed: 0,
            scenario: None,
            out: None,
            svg: false,
            trace: false,
            particles: None,
            max_depth: None,
            max_macro_len: None,
            k: None,
            uct_c: None,
            replan_every_step: None,
            subtree_reuse: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: BenchConfig = serde_json::from_str(s).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.env.is_empty() || self.solver.is_empty() || self.heuristic.is_empty() || self.epsilon.is_empty() {
            return Err(BenchError::Config("env, solver, heuristic and epsilon need at least one value".into()));
        }
        if self.episodes == 0 {
            return Err(BenchError::Config("episodes must be at least 1".into()));
        }
        if self.plan_time_ms.is_some() && self.plan_sims.is_some() {
            return Err(BenchError::Config("give plan-time-ms or plan-sims, not both".into()));
        }
        if self.plan_sims == Some(0) || self.plan_time_ms == Some(0) {
            return Err(BenchError::Config("planning budget must be positive".into()));
        }
        if let Some(e) = self.epsilon.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(BenchError::Config(format!("epsilon must lie in [0, 1], got {e}")));
        }
        Ok(())
    }

    pub fn budget(&self) -> Budget {
        match (self.plan_sims, self.plan_time_ms) {
            (Some(n), _) => Budget::Simulations(n),
            (None, Some(ms)) => Budget::millis(ms),
            (None, None) => Budget::millis(1000),
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &env in &self.env {
            for &solver in &self.solver {
                for &heuristic in &self.heuristic {
                    for &epsilon in &self.epsilon {
                        out.push(Cell {
                            env,
                            solver,
                            heuristic,
                            epsilon,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn episode_config(&self, cell: &Cell) -> EpisodeConfig {
        let mut cfg = EpisodeConfig::for_env(cell.env, cell.solver);
        cfg.heuristic = cell.heuristic;
        cfg.epsilon = cell.epsilon;
        cfg.budget = self.budget();
        let o = self;
        if let Some(v) = o.particles {
            cfg.particles = v;
        }
        if let Some(v) = o.max_depth {
            cfg.max_depth = v;
        }
        if let Some(v) = o.max_macro_len {
            if cell.solver != SolverKind::RefBasic {
                cfg.max_macro_len = v;
            }
        }
        if let Some(v) = o.k {
            cfg.k = v;
        }
        if o.uct_c.is_some() {
            cfg.uct_c = o.uct_c;
        }
        if let Some(v) = o.replan_every_step {
            cfg.replan_every_step = v;
        }
        if let Some(v) = o.subtree_reuse {
            cfg.subtree_reuse = v;
        }
        cfg.trace = self.svg || self.trace;
        cfg
    }

    /// The fixed scenario file, if any, checked against every configured env.
    pub fn load_scenario(&self) -> Result<Option<Scenario>> {
        let Some(path) = &self.scenario else {
            return Ok(None);
        };
        let text = std::fs::read_to_string(path)?;
        let sc = Scenario::from_json(&text)?;
        if let Some(env) = self.env.iter().find(|e| **e != sc.kind) {
            return Err(BenchError::Config(format!(
                "scenario file is a {} scenario but env {} was requested",
                sc.kind, env
            )));
        }
        Ok(Some(sc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalars_and_lists_both_parse() {
        let cfg = BenchConfig::from_json(
            r#"{"env": "maze2d", "solver": ["nop", "pomcp"], "heuristic": "entropy",
                "epsilon": [0.0, 0.5], "episodes": 2, "plan-sims": 50}"#,
        )
        .unwrap();
        assert_eq!(cfg.env, vec![EnvKind::Maze2d]);
        assert_eq!(cfg.solver, vec![SolverKind::Nop, SolverKind::Pomcp]);
        assert_eq!(cfg.cells().len(), 4);
        assert_eq!(cfg.budget(), Budget::Simulations(50));
    }

    #[test]
    fn unknown_names_are_config_errors() {
        assert!(BenchConfig::from_json(r#"{"env": "maze2d", "solver": "dqn"}"#).is_err());
        assert!(BenchConfig::from_json(r#"{"env": "mars", "solver": "nop"}"#).is_err());
        assert!(BenchConfig::from_json(r#"{"env": "maze2d", "solver": "nop", "bogus": 1}"#).is_err());
        assert!("r-pomcp".parse::<SolverKind>().is_ok());
        assert!("rpomcp".parse::<SolverKind>().is_err());
    }

    #[test]
    fn ref_basic_keeps_unit_macros() {
        let mut cfg = BenchConfig::new(EnvKind::Maze2d, SolverKind::RefBasic);
        cfg.max_macro_len = Some(6);
        let cell = &cfg.cells()[0];
        assert_eq!(cfg.episode_config(cell).max_macro_len, 1);
    }
}
