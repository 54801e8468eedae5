//! Top-down SVG rendering of a scenario and one episode's trajectory.
//!
//! One element per region and one polyline per moving body; 3-D scenes are
//! projected onto the x-y plane.

use std::fmt::Write;

use refpomdp::envs::{EnvKind, Scenario};
use refpomdp::sbmp::Shape;

use crate::episode::Trace;
use crate::error::{BenchError, Result};

const CANVAS: f64 = 600.0;
const SPAWN_RADIUS: f64 = 4.0;

struct Frame {
    lo: [f64; 2],
    hi_y: f64,
    scale: f64,
}

impl Frame {
    fn x(&self, x: f64) -> f64 {
        (x - self.lo[0]) * self.scale
    }

    fn y(&self, y: f64) -> f64 {
        (self.hi_y - y) * self.scale
    }
}

fn shape(out: &mut String, f: &Frame, s: &Shape, fill: &str, class: &str) {
    match s {
        Shape::Box { center, extents } => {
            let _ = writeln!(
                out,
                r#"<rect class="{class}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                f.x(center[0] - extents[0]),
                f.y(center[1] + extents[1]),
                2.0 * extents[0] * f.scale,
                2.0 * extents[1] * f.scale,
            );
        }
        Shape::Sphere { center, radius } => {
            let _ = writeln!(
                out,
                r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{fill}"/>"#,
                f.x(center[0]),
                f.y(center[1]),
                radius * f.scale,
            );
        }
    }
}

fn polyline(out: &mut String, f: &Frame, pts: impl Iterator<Item = [f64; 2]>, stroke: &str) {
    let coords: Vec<String> = pts.map(|p| format!("{:.2},{:.2}", f.x(p[0]), f.y(p[1]))).collect();
    let _ = writeln!(
        out,
        r#"<polyline class="trajectory" points="{}" fill="none" stroke="{stroke}" stroke-width="2"/>"#,
        coords.join(" ")
    );
}

/// Bodies tracked per trace state: the robot, or every drone plus the target.
fn bodies(scenario: &Scenario) -> usize {
    match (scenario.kind, &scenario.tag) {
        (EnvKind::DroneTag, Some(t)) => t.drones + 1,
        _ => 1,
    }
}

/// Deterministic SVG of `scenario` with the trajectory of `trace`, if any.
pub fn render_trajectory(scenario: &Scenario, trace: Option<&Trace>) -> Result<String> {
    let dim = scenario.dim();
    let nbodies = bodies(scenario);
    if let Some(t) = trace {
        if let Some(bad) = t.states.iter().find(|s| s.len() != nbodies * dim) {
            return Err(BenchError::Render(format!(
                "trace state has {} coordinates, scenario needs {}",
                bad.len(),
                nbodies * dim
            )));
        }
    }
    let b = scenario.workspace.bounds();
    let extent = b.extent(0).max(b.extent(1)).max(f64::MIN_POSITIVE);
    let f = Frame {
        lo: [b.lo[0], b.lo[1]],
        hi_y: b.hi[1],
        scale: CANVAS / extent,
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.2} {:.2}">"#,
        b.extent(0) * f.scale,
        b.extent(1) * f.scale,
        b.extent(0) * f.scale,
        b.extent(1) * f.scale,
    );
    for s in scenario.workspace.obstacles() {
        shape(&mut out, &f, s, "grey", "obstacle");
    }
    for s in &scenario.landmarks {
        shape(&mut out, &f, s, "purple", "landmark");
    }
    for s in &scenario.danger_zones {
        shape(&mut out, &f, s, "red", "danger");
    }
    for s in &scenario.goals {
        shape(&mut out, &f, s, "green", "goal");
    }
    for p in &scenario.spawns {
        let _ = writeln!(
            out,
            r#"<circle class="spawn" cx="{:.2}" cy="{:.2}" r="{SPAWN_RADIUS:.2}" fill="orange"/>"#,
            f.x(p[0]),
            f.y(p[1]),
        );
    }
    if let Some(t) = trace.filter(|t| !t.states.is_empty()) {
        for body in 0..nbodies {
            let stroke = if nbodies > 1 && body == nbodies - 1 { "green" } else { "blue" };
            let at = body * dim;
            polyline(&mut out, &f, t.states.iter().map(|s| [s[at], s[at + 1]]), stroke);
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use refpomdp::envs::maze2d_scenario;

    fn regions(sc: &Scenario) -> usize {
        sc.workspace.obstacles().len() + sc.landmarks.len() + sc.danger_zones.len() + sc.goals.len() + sc.spawns.len()
    }

    fn elements(svg: &str) -> usize {
        svg.lines()
            .filter(|l| l.starts_with("<rect") || l.starts_with("<circle") || l.starts_with("<polyline"))
            .count()
    }

    #[test]
    fn element_count_and_determinism() {
        let sc = maze2d_scenario();
        let empty = render_trajectory(&sc, None).unwrap();
        assert_eq!(elements(&empty), regions(&sc));
        let t = Trace {
            states: vec![vec![2.5, 4.5], vec![3.5, 4.5]],
            steps: Vec::new(),
        };
        let a = render_trajectory(&sc, Some(&t)).unwrap();
        assert_eq!(elements(&a), regions(&sc) + 1);
        assert_eq!(a, render_trajectory(&sc, Some(&t)).unwrap());
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let t = Trace {
            states: vec![vec![1.0, 2.0, 3.0]],
            steps: Vec::new(),
        };
        assert!(render_trajectory(&maze2d_scenario(), Some(&t)).is_err());
    }
}
