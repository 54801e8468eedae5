//! Benchmark grids: episode fan-out over workers and artifact writing.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use refpomdp::envs::{default_scenario, Scenario};

use crate::config::{BenchConfig, Cell, EpisodeConfig};
use crate::episode::{run_episode, EpisodeRecord, EpisodeResult};
use crate::error::{BenchError, Result};
use crate::render::render_trajectory;
use crate::summary::{summarize, CellSummary};

pub const WORKERS_VAR: &str = "BENCH_WORKERS";

/// Worker count from `BENCH_WORKERS`, defaulting to 1.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n >= 1)
            .ok_or_else(|| BenchError::Config(format!("{WORKERS_VAR} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(1),
    }
}

struct Job {
    cell: usize,
    seed: u64,
    config: EpisodeConfig,
}

#[derive(Debug)]
pub struct BenchOutput {
    pub cells: Vec<Cell>,
    /// In cell order, then seed order.
    pub episodes: Vec<(Scenario, EpisodeResult)>,
    pub summary: Vec<CellSummary>,
}

impl BenchOutput {
    pub fn records(&self) -> Vec<EpisodeRecord> {
        self.episodes.iter().map(|(_, e)| e.record.clone()).collect()
    }
}

fn scenario_for(fixed: Option<&Scenario>, cell: &Cell, seed: u64) -> Result<Scenario> {
    match fixed {
        Some(s) => Ok(s.clone()),
        None => Ok(default_scenario(cell.env, seed)?),
    }
}

/// Runs every cell of `cfg` for seeds `seed .. seed + episodes` on `workers`
/// threads. Results do not depend on `workers`.
pub fn run_benchmark(cfg: &BenchConfig, workers: usize) -> Result<BenchOutput> {
    cfg.validate()?;
    let fixed = cfg.load_scenario()?;
    let cells = cfg.cells();
    let jobs: Vec<Job> = cells
        .iter()
        .enumerate()
        .flat_map(|(i, cell)| {
            let config = cfg.episode_config(cell);
            (0..cfg.episodes as u64).map(move |k| Job {
                cell: i,
                seed: cfg.seed + k,
                config: config.clone(),
            })
        })
        .collect();
    let run = |job: &Job| -> Result<(Scenario, EpisodeResult)> {
        let sc = scenario_for(fixed.as_ref(), &cells[job.cell], job.seed)?;
        let result = run_episode(&sc, &job.config, job.seed)?;
        Ok((sc, result))
    };
    let episodes: Vec<(Scenario, EpisodeResult)> = if workers <= 1 {
        jobs.iter().map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(run).collect::<Result<_>>())?
    };
    let records: Vec<EpisodeRecord> = episodes.iter().map(|(_, e)| e.record.clone()).collect();
    let summary = summarize(&records);
    Ok(BenchOutput {
        cells,
        episodes,
        summary,
    })
}

/// `episodes.csv` contents; deterministic under fixed seeds.
pub fn episodes_csv(records: &[EpisodeRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `episodes.csv`, `timings.csv`, `summary.json` and, when enabled,
/// `traj_<seed>.svg` and `trace_<seed>.jsonl` files into `dir`.
pub fn write_artifacts(out: &BenchOutput, cfg: &BenchConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("episodes.csv"), episodes_csv(&out.records())?)?;

    let mut t = csv::Writer::from_path(dir.join("timings.csv"))?;
    t.write_record(["env", "solver", "heuristic", "epsilon", "seed", "cycle", "plan_ms", "episode_ms"])?;
    for (_, e) in &out.episodes {
        let r = &e.record;
        for (i, d) in e.cycle_times.iter().enumerate() {
            t.write_record([
                r.env.to_string(),
                r.solver.to_string(),
                r.heuristic.to_string(),
                r.epsilon.to_string(),
                r.seed.to_string(),
                i.to_string(),
                format!("{:.3}", d.as_secs_f64() * 1e3),
                format!("{:.3}", r.wall_time.as_secs_f64() * 1e3),
            ])?;
        }
    }
    t.flush()?;

    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&out.summary)? + "\n")?;

    let multi = out.cells.len() > 1;
    for (sc, e) in &out.episodes {
        if let Some(trace) = &e.trace {
            let r = &e.record;
            let stem = if multi {
                format!("{}_{}_{}_{}_{}", r.env, r.solver, r.heuristic, r.epsilon, r.seed)
            } else {
                r.seed.to_string()
            };
            if cfg.svg {
                fs::write(dir.join(format!("traj_{stem}.svg")), render_trajectory(sc, Some(trace))?)?;
            }
            if cfg.trace {
                let mut lines = String::new();
                for step in &trace.steps {
                    lines.push_str(&serde_json::to_string(step)?);
                    lines.push('\n');
                }
                fs::write(dir.join(format!("trace_{stem}.jsonl")), lines)?;
            }
        }
    }
    Ok(())
}
