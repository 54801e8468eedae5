//! Batched local-motion validation.
//!
//! A straight motion is discretized at `validation_resolution` and the
//! interpolated configurations are checked `batch_width` at a time. Lanes of a
//! batch are strided across the whole segment (lane `j` of round `k` checks
//! sample `k + j·stride`), so the first round already probes the motion at
//! evenly spread points and a collision anywhere is usually found early.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::workspace::Workspace;

/// Lanes evaluated together by the batched checker.
pub const MAX_LANES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Maximum tree extension distance per RRT step.
    pub step_extend: f64,
    /// Maximum spacing between checked configurations along a motion.
    pub validation_resolution: f64,
    pub batch_width: usize,
    pub max_iterations: usize,
    /// Wall-clock limit; `None` gives the deterministic iteration-bounded mode.
    pub time_limit: Option<Duration>,
    pub simplify_rounds: usize,
}

impl PlannerParams {
    /// Defaults scaled to an environment's primitive step: extension of two
    /// steps and validation at a quarter step.
    pub fn for_step(step: f64) -> Self {
        PlannerParams {
            step_extend: 2.0 * step,
            validation_resolution: 0.25 * step,
            batch_width: 8,
            max_iterations: 2000,
            time_limit: None,
            simplify_rounds: 32,
        }
    }
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams::for_step(1.0)
    }
}

/// Number of intervals used to discretize a motion of `length`.
pub(crate) fn intervals(length: f64, resolution: f64) -> usize {
    ((length / resolution).ceil() as usize).max(1)
}

/// True iff every interpolated configuration along `q0 → q1` (spacing at most
/// `validation_resolution`, endpoints included) is valid. The answer does not
/// depend on `batch_width`.
pub fn validate_motion(q0: &[f64], q1: &[f64], world: &Workspace, params: &PlannerParams) -> bool {
    validate_motion_at(q0, q1, world, params.validation_resolution, params.batch_width)
}

pub(crate) fn validate_motion_at(
    q0: &[f64],
    q1: &[f64],
    world: &Workspace,
    resolution: f64,
    batch_width: usize,
) -> bool {
    let dim = world.dim();
    debug_assert_eq!(q0.len(), dim);
    debug_assert_eq!(q1.len(), dim);
    let length = q0
        .iter()
        .zip(q1)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let n = intervals(length, resolution);
    let samples = n + 1;
    let width = batch_width.clamp(1, MAX_LANES);
    let stride = samples.div_ceil(width);

    let mut lanes = [[0.0f64; MAX_LANES]; 3];
    for round in 0..stride {
        let mut active = 0;
        for j in 0..width {
            let idx = round + j * stride;
            if idx >= samples {
                break;
            }
            let t = idx as f64 / n as f64;
            for d in 0..dim {
                lanes[d][active] = q0[d] + t * (q1[d] - q0[d]);
            }
            active += 1;
        }
        if active > 0 && batch_collides(world, &lanes, dim, active) {
            return false;
        }
    }
    true
}

/// Checks `active` lane configurations at once; true if any is invalid.
fn batch_collides(world: &Workspace, lanes: &[[f64; MAX_LANES]; 3], dim: usize, active: usize) -> bool {
    let bounds = world.bounds();
    let mut hit = [false; MAX_LANES];
    for d in 0..dim {
        let (lo, hi) = (bounds.lo[d], bounds.hi[d]);
        for l in 0..MAX_LANES {
            hit[l] |= !(lanes[d][l] >= lo && lanes[d][l] <= hi);
        }
    }
    let p = world.packed();
    for i in 0..p.num_boxes() {
        let mut inside = [true; MAX_LANES];
        for d in 0..dim {
            let (lo, hi) = (p.box_lo[d][i], p.box_hi[d][i]);
            for l in 0..MAX_LANES {
                inside[l] &= lanes[d][l] >= lo && lanes[d][l] <= hi;
            }
        }
        for l in 0..MAX_LANES {
            hit[l] |= inside[l];
        }
        if hit[..active].iter().any(|h| *h) {
            return true;
        }
    }
    for (i, r2) in p.sphere_r2.iter().enumerate() {
        let mut d2 = [0.0f64; MAX_LANES];
        for d in 0..dim {
            let c = p.sphere_c[d][i];
            for l in 0..MAX_LANES {
                let t = lanes[d][l] - c;
                d2[l] += t * t;
            }
        }
        for l in 0..MAX_LANES {
            hit[l] |= d2[l] <= *r2;
        }
    }
    hit[..active].iter().any(|h| *h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbmp::workspace::{Bounds, Shape};

    fn walled() -> Workspace {
        Workspace::new(
            Bounds::new(vec![0.0, 0.0], vec![10.0, 10.0]),
            vec![Shape::aabb(&[4.0, 0.0], &[5.0, 8.0])],
        )
        .unwrap()
    }

    #[test]
    fn zero_length_motion_in_free_space() {
        let w = walled();
        assert!(validate_motion(&[1.0, 1.0], &[1.0, 1.0], &w, &PlannerParams::default()));
    }

    #[test]
    fn crossing_a_box_is_invalid() {
        let w = walled();
        let p = PlannerParams::default();
        assert!(!validate_motion(&[1.0, 1.0], &[9.0, 1.0], &w, &p));
        assert!(validate_motion(&[1.0, 9.0], &[9.0, 9.0], &w, &p));
    }

    #[test]
    fn batch_width_does_not_change_answers() {
        let w = walled();
        for width in [1, 2, 3, 4, 8, 16, 64] {
            let p = PlannerParams {
                batch_width: width,
                ..PlannerParams::default()
            };
            assert!(!validate_motion(&[1.0, 1.0], &[9.0, 1.0], &w, &p));
            assert!(validate_motion(&[1.0, 9.0], &[9.0, 9.0], &w, &p));
        }
    }
}
