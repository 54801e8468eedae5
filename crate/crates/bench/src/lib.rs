//! Episode runner and benchmark harness for the `refpomdp` planners.
//!
//! [`run_episode`] drives one closed-loop episode; [`run_benchmark`] runs a
//! grid of (env, solver, heuristic, epsilon) cells over consecutive seeds and
//! [`write_artifacts`] stores `episodes.csv`, `timings.csv`, `summary.json`
//! and optional SVG trajectories.

pub mod config;
pub mod episode;
pub mod error;
pub mod render;
pub mod run;
pub mod summary;

pub use config::{BenchConfig, Cell, EpisodeConfig, SolverKind};
pub use episode::{run_episode, EpisodeRecord, EpisodeResult, Trace};
pub use error::{BenchError, Result};
pub use render::render_trajectory;
pub use run::{episodes_csv, run_benchmark, workers_from_env, write_artifacts, BenchOutput};
pub use summary::{mean_stderr, summarize, CellSummary};
