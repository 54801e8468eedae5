//! Online long-horizon POMDP planning with macro actions sampled from a fast
//! sampling-based motion planner.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`], [`soft`] and [`belief`]: POMDP vocabulary, the KL-regularized
//!   Bellman mathematics and particle beliefs.
//! - [`sbmp`]: batched motion validation, RRT-Connect and macro fashioning.
//! - [`subgoals`]: subgoal heuristics that steer the motion planner.
//! - [`envs`]: Light-Dark, Maze2D, Random3D and Multi-Drone Tag.
//! - [`reference`]: reference policies and value heuristics built on the above.
//! - [`refsolver`]: the reference-based belief-tree planner.
//! - [`baselines`]: POMCP, R-POMCP and B-VAMP.

pub mod baselines;
pub mod belief;
pub mod envs;
pub mod error;
pub mod model;
pub mod reference;
pub mod refsolver;
pub mod sbmp;
pub mod soft;
pub mod subgoals;

pub use error::{Error, Result};
pub use model::{
    execute_macro, rng_from_seed, Budget, Environment, MacroAction, MacroObservation, ObsKey,
    Observation, PrimitiveAction, SimRng, SolverParams, State, Step, StepEvent,
};
