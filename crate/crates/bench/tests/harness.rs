use refpomdp::envs::{lightdark_scenario_with, EnvKind};
use refpomdp::Budget;
use refpomdp_bench::{
    episodes_csv, mean_stderr, run_benchmark, run_episode, write_artifacts, BenchConfig, EpisodeConfig, EpisodeRecord,
    SolverKind,
};

fn small_grid() -> BenchConfig {
    BenchConfig {
        solver: vec![SolverKind::Nop, SolverKind::BVamp],
        episodes: 3,
        plan_sims: Some(60),
        seed: 10,
        ..BenchConfig::new(EnvKind::LightDark, SolverKind::Nop)
    }
}

#[test]
fn csv_has_one_row_per_cell_and_seed() {
    let out = run_benchmark(&small_grid(), 1).unwrap();
    let text = episodes_csv(&out.records()).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<EpisodeRecord> = reader.deserialize().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), 6);
    let seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, [10, 11, 12, 10, 11, 12]);
    assert!(rows[..3].iter().all(|r| r.solver == SolverKind::Nop));
    assert!(rows[3..].iter().all(|r| r.solver == SolverKind::BVamp));
}

#[test]
fn worker_count_does_not_change_results() {
    let cfg = small_grid();
    let serial = episodes_csv(&run_benchmark(&cfg, 1).unwrap().records()).unwrap();
    let parallel = episodes_csv(&run_benchmark(&cfg, 3).unwrap().records()).unwrap();
    assert_eq!(serial, parallel);
}

#[test]
fn summary_agrees_with_the_csv() {
    let cfg = small_grid();
    let out = run_benchmark(&cfg, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_artifacts(&out, &cfg, dir.path()).unwrap();
    let mut reader = csv::Reader::from_path(dir.path().join("episodes.csv")).unwrap();
    let rows: Vec<EpisodeRecord> = reader.deserialize().collect::<Result<_, _>>().unwrap();
    let summary: Vec<refpomdp_bench::CellSummary> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.len(), 2);
    for cell in &summary {
        let mine: Vec<&EpisodeRecord> = rows.iter().filter(|r| r.solver == cell.solver).collect();
        let rewards: Vec<f64> = mine.iter().map(|r| r.total_reward).collect();
        let (mean, se) = mean_stderr(&rewards);
        let success = mine.iter().filter(|r| r.success).count() as f64 / mine.len() as f64;
        let steps = mine.iter().map(|r| r.primitive_steps as f64).sum::<f64>() / mine.len() as f64;
        assert_eq!(cell.episodes, mine.len());
        assert!((cell.mean_reward - mean).abs() <= 1e-12);
        assert!((cell.stderr_reward - se).abs() <= 1e-12);
        assert!((cell.success_rate - success).abs() <= 1e-12);
        assert!((cell.mean_steps - steps).abs() <= 1e-12);
    }
    assert!(dir.path().join("timings.csv").exists());
}

#[test]
fn short_lit_episode_reaches_the_goal() {
    // Start inside the light stripe, goal two units east.
    let sc = lightdark_scenario_with([4.0, 4.0], [6.0, 4.0], 4.0);
    let cfg = EpisodeConfig {
        budget: Budget::Simulations(200),
        ..EpisodeConfig::for_env(EnvKind::LightDark, SolverKind::Nop)
    };
    for seed in 0..3 {
        let r = run_episode(&sc, &cfg, seed).unwrap().record;
        assert!(r.success, "seed {seed}: {r:?}");
        assert!(r.primitive_steps <= 12, "seed {seed}: {} steps", r.primitive_steps);
    }
}

#[test]
fn cli_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(["run", "--env", "lightdark", "--solver", "nop", "--episodes", "2", "--plan-sims", "50"])
        .args(["--seed", "3", "--svg", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["episodes.csv", "timings.csv", "summary.json", "traj_3.svg", "traj_4.svg"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
}
