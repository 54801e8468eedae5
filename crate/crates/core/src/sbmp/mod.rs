//! Sampling-based motion planning over axis-aligned box and sphere worlds.
//!
//! The planner's inner loop is motion validation, which is evaluated in
//! batches of interpolated configurations (see [`motion`]).

mod fashion;
mod motion;
mod rrt;
mod workspace;

pub use fashion::{fashion_macro_action, fashion_macro_action_in, CardinalActions, DOWN, EAST, NORTH, SOUTH, UP, WEST};
pub use motion::{validate_motion, PlannerParams, MAX_LANES};
pub use rrt::{rrt_connect, simplify_path, Path, PlanFailure};
pub use workspace::{Bounds, Shape, Workspace};

pub(crate) use motion::validate_motion_at;
pub(crate) use rrt::distance;

/// Validates `q0 → q1` at an arbitrary resolution with a given batch width.
pub fn validate_motion_with(q0: &[f64], q1: &[f64], world: &Workspace, resolution: f64, batch_width: usize) -> bool {
    validate_motion_at(q0, q1, world, resolution, batch_width)
}
