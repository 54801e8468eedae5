use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use refpomdp::envs::EnvKind;
use refpomdp::subgoals::HeuristicMode;
use refpomdp_bench::{run_benchmark, workers_from_env, write_artifacts, BenchConfig, BenchError, SolverKind};

#[derive(Parser)]
#[command(name = "bench", about = "Run planner benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a grid of episodes and write episodes.csv, timings.csv and summary.json.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config with the same keys as these flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    env: Vec<EnvKind>,
    #[arg(long, value_delimiter = ',')]
    solver: Vec<SolverKind>,
    #[arg(long, value_delimiter = ',')]
    heuristic: Vec<HeuristicMode>,
    #[arg(long, value_delimiter = ',')]
    epsilon: Vec<f64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long, conflicts_with = "plan_sims")]
    plan_time_ms: Option<u64>,
    #[arg(long)]
    plan_sims: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render traj_<seed>.svg for every episode.
    #[arg(long)]
    svg: bool,
    /// Write trace_<seed>.jsonl with per-step states, actions and beliefs.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    max_macro_len: Option<usize>,
    /// Macros per node for r-pomcp.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    uct_c: Option<f64>,
    #[arg(long)]
    replan_every_step: bool,
    #[arg(long)]
    subtree_reuse: bool,
}

fn build_config(a: RunArgs) -> Result<BenchConfig, BenchError> {
    let mut cfg = match &a.config {
        Some(path) => BenchConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => {
            let (Some(env), Some(solver)) = (a.env.first(), a.solver.first()) else {
                return Err(BenchError::Config("--env and --solver are required without --config".into()));
            };
            BenchConfig::new(*env, *solver)
        }
    };
    if !a.env.is_empty() {
        cfg.env = a.env;
    }
    if !a.solver.is_empty() {
        cfg.solver = a.solver;
    }
    if !a.heuristic.is_empty() {
        cfg.heuristic = a.heuristic;
    }
    if !a.epsilon.is_empty() {
        cfg.epsilon = a.epsilon;
    }
    if let Some(v) = a.episodes {
        cfg.episodes = v;
    }
    if a.plan_time_ms.is_some() {
        cfg.plan_time_ms = a.plan_time_ms;
        cfg.plan_sims = None;
    }
    if a.plan_sims.is_some() {
        cfg.plan_sims = a.plan_sims;
        cfg.plan_time_ms = None;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if a.scenario.is_some() {
        cfg.scenario = a.scenario;
    }
    if a.out.is_some() {
        cfg.out = a.out;
    }
    cfg.svg |= a.svg;
    cfg.trace |= a.trace;
    cfg.particles = a.particles.or(cfg.particles);
    cfg.max_depth = a.max_depth.or(cfg.max_depth);
    cfg.max_macro_len = a.max_macro_len.or(cfg.max_macro_len);
    cfg.k = a.k.or(cfg.k);
    cfg.uct_c = a.uct_c.or(cfg.uct_c);
    if a.replan_every_step {
        cfg.replan_every_step = Some(true);
    }
    if a.subtree_reuse {
        cfg.subtree_reuse = Some(true);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(a: RunArgs) -> Result<(), BenchError> {
    let cfg = build_config(a)?;
    let workers = workers_from_env()?;
    let out = run_benchmark(&cfg, workers)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("bench_out"));
    write_artifacts(&out, &cfg, &dir)?;
    for s in &out.summary {
        println!(
            "{:<9} {:<9} {:<8} eps={:<4} n={:<3} success={:>5.1}% reward={:>9.2} ({:.2}) steps={:>7.1} cycles={:>6.1}",
            s.env,
            s.solver,
            s.heuristic,
            s.epsilon,
            s.episodes,
            100.0 * s.success_rate,
            s.mean_reward,
            s.stderr_reward,
            s.mean_steps,
            s.mean_cycles
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
