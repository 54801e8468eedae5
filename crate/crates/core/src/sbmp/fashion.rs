//! Turning planned paths into sequences of cardinal primitive actions.

use serde::{Deserialize, Serialize};

use super::rrt::Path;
use super::workspace::Workspace;
use crate::model::{MacroAction, PrimitiveAction};

/// Cardinal moves along the coordinate axes.
///
/// Ids: `0 = North (+y)`, `1 = South (−y)`, `2 = East (+x)`, `3 = West (−x)`,
/// and in 3-D `4 = Up (+z)`, `5 = Down (−z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardinalActions {
    dim: usize,
}

pub const NORTH: PrimitiveAction = PrimitiveAction(0);
pub const SOUTH: PrimitiveAction = PrimitiveAction(1);
pub const EAST: PrimitiveAction = PrimitiveAction(2);
pub const WEST: PrimitiveAction = PrimitiveAction(3);
pub const UP: PrimitiveAction = PrimitiveAction(4);
pub const DOWN: PrimitiveAction = PrimitiveAction(5);

/// Axis preference when residuals tie: x, then y, then z.
const AXIS_ORDER: [usize; 3] = [0, 1, 2];

impl CardinalActions {
    pub fn new(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "cardinal actions exist for 2-D and 3-D only");
        CardinalActions { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        2 * self.dim
    }

    /// `(axis, sign)` moved along by `a`.
    pub fn direction(&self, a: PrimitiveAction) -> (usize, f64) {
        match a.0 {
            0 => (1, 1.0),
            1 => (1, -1.0),
            2 => (0, 1.0),
            3 => (0, -1.0),
            4 => (2, 1.0),
            5 => (2, -1.0),
            other => panic!("no cardinal action with id {other}"),
        }
    }

    pub fn action(&self, axis: usize, positive: bool) -> PrimitiveAction {
        match (axis, positive) {
            (1, true) => NORTH,
            (1, false) => SOUTH,
            (0, true) => EAST,
            (0, false) => WEST,
            (2, true) => UP,
            (2, false) => DOWN,
            _ => panic!("axis {axis} out of range"),
        }
    }

    /// Unit displacement vector of `a`.
    pub fn displacement(&self, a: PrimitiveAction, step: f64) -> Vec<f64> {
        let (axis, sign) = self.direction(a);
        let mut v = vec![0.0; self.dim];
        v[axis] = sign * step;
        v
    }

    /// The two (2-D) or four (3-D) actions orthogonal to `a`.
    pub fn orthogonal(&self, a: PrimitiveAction) -> Vec<PrimitiveAction> {
        let (axis, _) = self.direction(a);
        (0..self.dim)
            .filter(|d| *d != axis)
            .flat_map(|d| [self.action(d, true), self.action(d, false)])
            .collect()
    }

    /// Nominal endpoint of executing `actions` from `start` with no noise or collisions.
    pub fn nominal_endpoint(&self, start: &[f64], actions: &[PrimitiveAction], step: f64) -> Vec<f64> {
        let mut q = start.to_vec();
        for a in actions {
            let (axis, sign) = self.direction(*a);
            q[axis] += sign * step;
        }
        q
    }

    /// Axis with the largest absolute residual (ties broken by `AXIS_ORDER`).
    fn dominant_axis(&self, residual: &[f64]) -> usize {
        let mut best = AXIS_ORDER[0];
        for &axis in AXIS_ORDER.iter().take(self.dim) {
            if residual[axis].abs() > residual[best].abs() {
                best = axis;
            }
        }
        best
    }
}

/// Greedy axis decomposition of `path` into at most `max_len` cardinal moves of
/// `step_size`. The nominal position is carried across waypoints; each move goes
/// along the axis with the largest remaining residual while that residual
/// exceeds half a step. A path too short for any move yields one action along
/// its dominant axis.
pub fn fashion_macro_action(
    path: &Path,
    step_size: f64,
    actions: CardinalActions,
    max_len: usize,
) -> MacroAction {
    fashion(path, step_size, actions, max_len, None)
}

/// [`fashion_macro_action`] that never steps its nominal position out of
/// `world`: a blocked dominant axis gives way to the next axis with residual
/// left, and the macro ends early when every such move is blocked.
pub fn fashion_macro_action_in(
    path: &Path,
    step_size: f64,
    actions: CardinalActions,
    max_len: usize,
    world: &Workspace,
) -> MacroAction {
    fashion(path, step_size, actions, max_len, Some(world))
}

fn fashion(
    path: &Path,
    step_size: f64,
    actions: CardinalActions,
    max_len: usize,
    world: Option<&Workspace>,
) -> MacroAction {
    assert!(step_size > 0.0, "step size must be positive");
    let max_len = max_len.max(1);
    let dim = actions.dim();
    let mut cur = path.start().to_vec();
    let mut out: Vec<PrimitiveAction> = Vec::new();
    let half = 0.5 * step_size;
    'waypoints: for target in path.waypoints.iter().skip(1) {
        loop {
            let residual: Vec<f64> = (0..dim).map(|d| target[d] - cur[d]).collect();
            let axis = actions.dominant_axis(&residual);
            if residual[axis].abs() <= half {
                break;
            }
            let mut axes: Vec<usize> = vec![axis];
            if world.is_some() {
                let mut rest: Vec<usize> = (0..dim).filter(|d| *d != axis && residual[*d].abs() > half).collect();
                rest.sort_by(|a, b| residual[*b].abs().total_cmp(&residual[*a].abs()));
                axes.extend(rest);
            }
            let chosen = axes.into_iter().find_map(|d| {
                let mut next = cur.clone();
                next[d] += residual[d].signum() * step_size;
                match world {
                    Some(w) if !w.is_valid(&next) => None,
                    _ => Some((d, next)),
                }
            });
            let Some((d, next)) = chosen else {
                break 'waypoints;
            };
            out.push(actions.action(d, residual[d] > 0.0));
            cur = next;
            if out.len() >= max_len {
                break 'waypoints;
            }
        }
    }
    if out.is_empty() {
        let residual: Vec<f64> = (0..dim).map(|d| path.end()[d] - path.start()[d]).collect();
        let axis = actions.dominant_axis(&residual);
        out.push(actions.action(axis, residual[axis] >= 0.0));
    }
    MacroAction::new(out).expect("at least one action emitted")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(points: &[&[f64]]) -> Path {
        Path::new(points.iter().map(|q| q.to_vec()).collect())
    }

    #[test]
    fn straight_east() {
        let m = fashion_macro_action(&p(&[&[0.0, 0.0], &[2.0, 0.0]]), 0.5, CardinalActions::new(2), 100);
        assert_eq!(m.actions(), &[EAST, EAST, EAST, EAST]);
    }

    #[test]
    fn degenerate_path() {
        let m = fashion_macro_action(&p(&[&[0.0, 0.0], &[0.0, 0.0]]), 0.5, CardinalActions::new(2), 100);
        assert_eq!(m.len(), 1);
        let m = fashion_macro_action(&p(&[&[0.0, 0.0]]), 0.5, CardinalActions::new(2), 100);
        assert_eq!(m.len(), 1);
        let m = fashion_macro_action(&p(&[&[0.0, 0.0], &[0.0, -0.2]]), 0.5, CardinalActions::new(2), 100);
        assert_eq!(m.actions(), &[SOUTH]);
    }

    #[test]
    fn diagonal_interleaves() {
        let m = fashion_macro_action(&p(&[&[0.0, 0.0], &[1.0, 1.0]]), 0.5, CardinalActions::new(2), 100);
        assert_eq!(m.actions(), &[EAST, NORTH, EAST, NORTH]);
    }

    #[test]
    fn truncates_at_max_len() {
        let m = fashion_macro_action(&p(&[&[0.0, 0.0], &[10.0, 0.0]]), 1.0, CardinalActions::new(2), 3);
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn three_d_moves() {
        let m = fashion_macro_action(&p(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, -2.0]]), 1.0, CardinalActions::new(3), 10);
        assert_eq!(m.actions(), &[DOWN, DOWN]);
    }

    #[test]
    fn world_aware_fashioning_goes_around_corners() {
        use crate::sbmp::{Bounds, Shape};
        // Box over [1, 3] x [0, 1]: x-first staircase from (0.5, 0.5) would enter it.
        let w = Workspace::new(
            Bounds::new(vec![0.0, 0.0], vec![5.0, 5.0]),
            vec![Shape::aabb(&[1.0, 0.0], &[3.0, 1.0])],
        )
        .unwrap();
        let path = p(&[&[0.5, 0.5], &[3.5, 1.5]]);
        let blind = fashion_macro_action(&path, 1.0, CardinalActions::new(2), 10);
        assert_eq!(blind.actions()[0], EAST);
        let m = fashion_macro_action_in(&path, 1.0, CardinalActions::new(2), 10, &w);
        assert_eq!(m.actions(), &[NORTH, EAST, EAST, EAST]);
        let end = CardinalActions::new(2).nominal_endpoint(&[0.5, 0.5], m.actions(), 1.0);
        assert_eq!(end, vec![3.5, 1.5]);
    }

    #[test]
    fn orthogonal_sets() {
        let a = CardinalActions::new(2);
        assert_eq!(a.orthogonal(NORTH), vec![EAST, WEST]);
        let a = CardinalActions::new(3);
        assert_eq!(a.orthogonal(UP), vec![EAST, WEST, NORTH, SOUTH]);
    }
}
