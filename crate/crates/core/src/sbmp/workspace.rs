//! Axis-aligned boxes, spheres and the bounded workspace they live in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inflation applied by [`Workspace::segment_clear`] to absorb round-off in
/// interpolated configurations.
pub const SWEEP_TOL: f64 = 1e-9;

/// Closed region: an axis-aligned box (center ± half extents) or a sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Box { center: Vec<f64>, extents: Vec<f64> },
    Sphere { center: Vec<f64>, radius: f64 },
}

impl Shape {
    pub fn aabb(lo: &[f64], hi: &[f64]) -> Shape {
        Shape::Box {
            center: lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
            extents: lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect(),
        }
    }

    pub fn sphere(center: &[f64], radius: f64) -> Shape {
        Shape::Sphere {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Shape::Box { center, .. } | Shape::Sphere { center, .. } => center.len(),
        }
    }

    pub fn center(&self) -> &[f64] {
        match self {
            Shape::Box { center, .. } | Shape::Sphere { center, .. } => center,
        }
    }

    /// Closed containment: the boundary belongs to the region.
    pub fn contains(&self, q: &[f64]) -> bool {
        match self {
            Shape::Box { center, extents } => q
                .iter()
                .zip(center.iter().zip(extents))
                .all(|(x, (c, e))| *x >= c - e && *x <= c + e),
            Shape::Sphere { center, radius } => {
                let d2: f64 = q.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 <= radius * radius
            }
        }
    }

    /// Point of the region closest to `q`.
    pub fn closest_point(&self, q: &[f64]) -> Vec<f64> {
        match self {
            Shape::Box { center, extents } => q
                .iter()
                .zip(center.iter().zip(extents))
                .map(|(x, (c, e))| x.clamp(c - e, c + e))
                .collect(),
            Shape::Sphere { center, radius } => {
                let d: f64 = q
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if d <= *radius {
                    q.to_vec()
                } else {
                    center
                        .iter()
                        .zip(q)
                        .map(|(c, x)| c + (x - c) * radius / d)
                        .collect()
                }
            }
        }
    }

    /// The region grown by `margin` in every direction (box faces move out).
    pub fn inflated(&self, margin: f64) -> Shape {
        match self {
            Shape::Box { center, extents } => Shape::Box {
                center: center.clone(),
                extents: extents.iter().map(|e| e + margin).collect(),
            },
            Shape::Sphere { center, radius } => Shape::Sphere {
                center: center.clone(),
                radius: radius + margin,
            },
        }
    }

    /// Axis-aligned bounding box as `(lo, hi)`.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Shape::Box { center, extents } => (
                center.iter().zip(extents).map(|(c, e)| c - e).collect(),
                center.iter().zip(extents).map(|(c, e)| c + e).collect(),
            ),
            Shape::Sphere { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Shape::Box { center, extents } => center
                .iter()
                .chain(extents)
                .all(|x| x.is_finite())
                && extents.iter().all(|e| *e >= 0.0),
            Shape::Sphere { center, radius } => {
                center.iter().all(|x| x.is_finite()) && radius.is_finite() && *radius >= 0.0
            }
        }
    }

    /// True when the two regions' bounding boxes overlap and, for sphere pairs,
    /// when the spheres themselves intersect. Used to keep goals away from danger.
    pub fn may_intersect(&self, other: &Shape) -> bool {
        if let (
            Shape::Sphere { center: a, radius: ra },
            Shape::Sphere { center: b, radius: rb },
        ) = (self, other)
        {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            return d2 <= (ra + rb) * (ra + rb);
        }
        let (alo, ahi) = self.bounds();
        let (blo, bhi) = other.bounds();
        (0..alo.len()).all(|d| alo[d] <= bhi[d] && blo[d] <= ahi[d])
    }
}

/// Axis-aligned bounds `[lo, hi]` per dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Bounds { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| *x >= *l && *x <= *h)
    }

    pub fn clamp(&self, q: &mut [f64]) {
        for (x, (l, h)) in q.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *x = x.clamp(*l, *h);
        }
    }

    pub fn extent(&self, d: usize) -> f64 {
        self.hi[d] - self.lo[d]
    }
}

/// Bounded 2-D or 3-D world with box and sphere obstacles.
///
/// Obstacles are additionally kept in a structure-of-arrays layout so that the
/// batched validity check runs branch-free over lanes of configurations.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "WorkspaceDoc", into = "WorkspaceDoc")]
pub struct Workspace {
    bounds: Bounds,
    obstacles: Vec<Shape>,
    #[serde(skip)]
    packed: Packed,
}

impl PartialEq for Workspace {
    fn eq(&self, other: &Self) -> bool {
        self.bounds == other.bounds && self.obstacles == other.obstacles
    }
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Packed {
    /// `box_lo[d][i]`, `box_hi[d][i]`.
    pub(crate) box_lo: Vec<Vec<f64>>,
    pub(crate) box_hi: Vec<Vec<f64>>,
    pub(crate) sphere_c: Vec<Vec<f64>>,
    pub(crate) sphere_r2: Vec<f64>,
}

impl Packed {
    fn build(dim: usize, obstacles: &[Shape]) -> Packed {
        let mut p = Packed {
            box_lo: vec![Vec::new(); dim],
            box_hi: vec![Vec::new(); dim],
            sphere_c: vec![Vec::new(); dim],
            sphere_r2: Vec::new(),
        };
        for o in obstacles {
            match o {
                Shape::Box { center, extents } => {
                    for d in 0..dim {
                        p.box_lo[d].push(center[d] - extents[d]);
                        p.box_hi[d].push(center[d] + extents[d]);
                    }
                }
                Shape::Sphere { center, radius } => {
                    for d in 0..dim {
                        p.sphere_c[d].push(center[d]);
                    }
                    p.sphere_r2.push(radius * radius);
                }
            }
        }
        p
    }

    pub(crate) fn num_boxes(&self) -> usize {
        self.box_lo.first().map_or(0, |v| v.len())
    }
}

#[derive(Serialize, Deserialize)]
struct WorkspaceDoc {
    bounds: Bounds,
    obstacles: Vec<Shape>,
}

impl TryFrom<WorkspaceDoc> for Workspace {
    type Error = Error;

    fn try_from(doc: WorkspaceDoc) -> Result<Self> {
        Workspace::new(doc.bounds, doc.obstacles)
    }
}

impl From<Workspace> for WorkspaceDoc {
    fn from(w: Workspace) -> Self {
        WorkspaceDoc {
            bounds: w.bounds,
            obstacles: w.obstacles,
        }
    }
}

impl Workspace {
    pub fn new(bounds: Bounds, obstacles: Vec<Shape>) -> Result<Self> {
        let dim = bounds.dim();
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidParameter(format!(
                "workspace dimension must be 2 or 3, got {dim}"
            )));
        }
        if bounds.hi.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bounds.hi.len(),
            });
        }
        if (0..dim).any(|d| !(bounds.lo[d] <= bounds.hi[d]) || !bounds.extent(d).is_finite()) {
            return Err(Error::InvalidParameter("workspace bounds must be finite with lo <= hi".into()));
        }
        for o in &obstacles {
            if o.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: o.dim(),
                });
            }
            if let Shape::Box { extents, .. } = o {
                if extents.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: extents.len(),
                    });
                }
            }
            if !o.is_finite() {
                return Err(Error::InvalidParameter("obstacle extents must be finite".into()));
            }
        }
        let packed = Packed::build(dim, &obstacles);
        Ok(Workspace {
            bounds,
            obstacles,
            packed,
        })
    }

    pub fn empty(bounds: Bounds) -> Self {
        Workspace::new(bounds, Vec::new()).expect("bounds validated by caller")
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn obstacles(&self) -> &[Shape] {
        &self.obstacles
    }

    pub(crate) fn packed(&self) -> &Packed {
        &self.packed
    }

    /// Exact test that the straight segment `q0 → q1` misses every obstacle
    /// (inflated by `SWEEP_TOL`). Bounds are convex, so valid endpoints keep
    /// the whole segment inside them.
    pub fn segment_clear(&self, q0: &[f64], q1: &[f64]) -> bool {
        if !self.bounds.contains(q0) || !self.bounds.contains(q1) {
            return false;
        }
        let p = &self.packed;
        let dim = q0.len();
        'boxes: for i in 0..p.num_boxes() {
            let (mut t0, mut t1) = (0.0f64, 1.0f64);
            for d in 0..dim {
                let lo = p.box_lo[d][i] - SWEEP_TOL;
                let hi = p.box_hi[d][i] + SWEEP_TOL;
                let dir = q1[d] - q0[d];
                if dir.abs() < 1e-15 {
                    if q0[d] < lo || q0[d] > hi {
                        continue 'boxes;
                    }
                } else {
                    let a = (lo - q0[d]) / dir;
                    let b = (hi - q0[d]) / dir;
                    t0 = t0.max(a.min(b));
                    t1 = t1.min(a.max(b));
                    if t0 > t1 {
                        continue 'boxes;
                    }
                }
            }
            return false;
        }
        let len2: f64 = (0..dim).map(|d| (q1[d] - q0[d]).powi(2)).sum();
        for (i, r2) in p.sphere_r2.iter().enumerate() {
            let c = |d: usize| p.sphere_c[d][i];
            let t = if len2 > 0.0 {
                ((0..dim).map(|d| (c(d) - q0[d]) * (q1[d] - q0[d])).sum::<f64>() / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let d2: f64 = (0..dim)
                .map(|d| (q0[d] + t * (q1[d] - q0[d]) - c(d)).powi(2))
                .sum();
            let r = r2.sqrt() + SWEEP_TOL;
            if d2 <= r * r {
                return false;
            }
        }
        true
    }

    /// Membership in the free space: inside the bounds and outside every
    /// (closed) obstacle.
    pub fn is_valid(&self, q: &[f64]) -> bool {
        assert_eq!(
            q.len(),
            self.dim(),
            "configuration dimension does not match the workspace"
        );
        self.is_valid_unchecked(q)
    }

    pub(crate) fn is_valid_unchecked(&self, q: &[f64]) -> bool {
        if !self.bounds.contains(q) {
            return false;
        }
        let p = &self.packed;
        let dim = q.len();
        for i in 0..p.num_boxes() {
            let mut inside = true;
            for d in 0..dim {
                inside &= q[d] >= p.box_lo[d][i] && q[d] <= p.box_hi[d][i];
            }
            if inside {
                return false;
            }
        }
        for (i, r2) in p.sphere_r2.iter().enumerate() {
            let mut d2 = 0.0;
            for d in 0..dim {
                let t = q[d] - p.sphere_c[d][i];
                d2 += t * t;
            }
            if d2 <= *r2 {
                return false;
            }
        }
        true
    }

    /// Checked variant of [`Workspace::is_valid`].
    pub fn try_is_valid(&self, q: &[f64]) -> Result<bool> {
        if q.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: q.len(),
            });
        }
        Ok(self.is_valid_unchecked(q))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world() -> Workspace {
        Workspace::new(
            Bounds::new(vec![0.0, 0.0], vec![10.0, 10.0]),
            vec![
                Shape::aabb(&[2.0, 2.0], &[4.0, 4.0]),
                Shape::sphere(&[7.0, 7.0], 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn empty_world_center_is_valid() {
        let w = Workspace::empty(Bounds::new(vec![0.0, 0.0], vec![10.0, 10.0]));
        assert!(w.is_valid(&[5.0, 5.0]));
    }

    #[test]
    fn containment_and_closed_faces() {
        let w = world();
        assert!(!w.is_valid(&[3.0, 3.0]));
        assert!(!w.is_valid(&[4.0, 3.0]), "box face is part of the obstacle");
        assert!(!w.is_valid(&[2.0, 2.0]), "box corner is part of the obstacle");
        assert!(!w.is_valid(&[8.0, 7.0]), "sphere surface is part of the obstacle");
        assert!(w.is_valid(&[4.0 + 1e-9, 3.0]));
        assert!(w.is_valid(&[0.0, 0.0]), "workspace bounds are inclusive");
        assert!(!w.is_valid(&[-1e-9, 5.0]));
    }

    #[test]
    #[should_panic]
    fn dimension_mismatch_is_a_contract_violation() {
        world().is_valid(&[1.0, 2.0, 3.0]);
    }

    #[test]
    fn json_round_trip() {
        let w = world();
        let s = w.to_json().unwrap();
        assert!(s.contains("\"type\": \"box\""));
        let back = Workspace::from_json(&s).unwrap();
        assert_eq!(back, w);
        assert!(!back.is_valid(&[3.0, 3.0]));
    }

    #[test]
    fn rejects_non_finite_obstacles() {
        let r = Workspace::new(
            Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]),
            vec![Shape::sphere(&[0.5, f64::NAN], 0.1)],
        );
        assert!(r.is_err());
    }
}
