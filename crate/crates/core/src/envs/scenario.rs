//! Scenario documents: workspace plus the task regions and parameters that
//! turn it into a POMDP.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sbmp::{Shape, Workspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    LightDark,
    Maze2d,
    Random3d,
    DroneTag,
}

impl std::str::FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lightdark" => Ok(EnvKind::LightDark),
            "maze2d" => Ok(EnvKind::Maze2d),
            "random3d" => Ok(EnvKind::Random3d),
            "dronetag" => Ok(EnvKind::DroneTag),
            other => Err(Error::InvalidParameter(format!("unknown environment '{other}'"))),
        }
    }
}

impl std::fmt::Display for EnvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnvKind::LightDark => "lightdark",
            EnvKind::Maze2d => "maze2d",
            EnvKind::Random3d => "random3d",
            EnvKind::DroneTag => "dronetag",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardSchedule {
    pub step: f64,
    pub goal: f64,
    pub danger: f64,
}

/// Vertical light stripe `x = x` whose readings degrade linearly with distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightStripe {
    pub x: f64,
    pub sigma_min: f64,
    pub slope: f64,
}

impl LightStripe {
    pub fn sigma(&self, q: &[f64]) -> f64 {
        self.sigma_min + self.slope * (q[0] - self.x).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Probability that a move goes in an orthogonal direction instead.
    pub slip: f64,
    /// Error direction drawn from every orthogonal direction (3-D) rather than
    /// the two in-plane ones.
    #[serde(default)]
    pub randomized_slip: bool,
    /// Standard deviation of landmark (or target) position readings.
    pub obs_sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub light: Option<LightStripe>,
    /// Standard deviation of the Gaussian initial belief around a spawn; 0 for
    /// exactly known spawns.
    #[serde(default)]
    pub initial_sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeLimits {
    pub max_primitive_steps: usize,
    pub max_planning_cycles: usize,
}

impl EpisodeLimits {
    pub fn validate(&self) -> Result<()> {
        if self.max_primitive_steps < 1 || self.max_planning_cycles < 1 {
            return Err(Error::InvalidParameter("episode limits must be >= 1".into()));
        }
        Ok(())
    }
}

/// Extra parameters of the multi-drone tag task.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TagParams {
    pub drones: usize,
    /// The target flees once a drone is this close.
    pub target_detect: f64,
    /// The target is observed once it is this close to any drone.
    pub drone_detect: f64,
    pub capture: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: EnvKind,
    pub workspace: Workspace,
    #[serde(default)]
    pub landmarks: Vec<Shape>,
    #[serde(default)]
    pub danger_zones: Vec<Shape>,
    pub spawns: Vec<Vec<f64>>,
    #[serde(default)]
    pub goals: Vec<Shape>,
    pub rewards: RewardSchedule,
    pub step_size: f64,
    pub noise: NoiseParams,
    pub limits: EpisodeLimits,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<TagParams>,
    /// Seed the scenario was generated from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.workspace.dim()
    }

    /// Checks spawn validity, region placement and goal/danger disjointness.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        let b = self.workspace.bounds();
        if !(self.step_size > 0.0) {
            return Err(Error::InvalidParameter("step_size must be positive".into()));
        }
        self.limits.validate()?;
        if self.spawns.is_empty() {
            return Err(Error::Domain("scenario needs at least one spawn".into()));
        }
        for s in &self.spawns {
            if s.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: s.len() });
            }
            if !self.workspace.is_valid(s) {
                return Err(Error::Domain(format!("spawn {s:?} is not a free configuration")));
            }
        }
        let regions = self
            .landmarks
            .iter()
            .chain(&self.danger_zones)
            .chain(&self.goals);
        for r in regions {
            if r.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.dim() });
            }
            let (lo, hi) = r.bounds();
            let inside = (0..dim).all(|d| hi[d] >= b.lo[d] && lo[d] <= b.hi[d]);
            if !inside {
                return Err(Error::Domain("region lies outside the workspace bounds".into()));
            }
        }
        for g in &self.goals {
            if self.danger_zones.iter().any(|z| g.may_intersect(z)) {
                return Err(Error::Domain("goal overlaps a danger zone".into()));
            }
        }
        if self.kind == EnvKind::DroneTag && self.tag.is_none() {
            return Err(Error::Domain("tag scenario without tag parameters".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(s)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn in_goal(&self, q: &[f64]) -> bool {
        self.goals.iter().any(|g| g.contains(q))
    }

    pub fn in_danger(&self, q: &[f64]) -> bool {
        self.danger_zones.iter().any(|z| z.contains(q))
    }

    pub fn in_landmark(&self, q: &[f64]) -> bool {
        self.landmarks.iter().any(|l| l.contains(q))
    }

    /// Workspace the reference planner searches: obstacles plus danger zones,
    /// so planned paths never cut through a penalty region.
    pub fn planning_workspace(&self) -> Workspace {
        self.padded_planning_workspace(0.0)
    }

    /// Like [`Scenario::planning_workspace`] with every danger zone grown by
    /// `margin`.
    pub fn padded_planning_workspace(&self, margin: f64) -> Workspace {
        let mut obstacles = self.workspace.obstacles().to_vec();
        obstacles.extend(self.danger_zones.iter().map(|z| z.inflated(margin)));
        Workspace::new(self.workspace.bounds().clone(), obstacles)
            .expect("scenario regions share the workspace dimension")
    }
}
