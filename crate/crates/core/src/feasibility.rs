//! Explicit constraints of the outer problem and corridor containment.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::geometry::{
    build_path, path_station_parameter, tangent_length, turn_angle, Alignment, Path,
};
use crate::terrain::{BoundingBox, Corridor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StationContainment {
    pub station: usize,
    /// `None` when the path never reaches the station line.
    pub t: Option<f64>,
    pub chainage: Option<f64>,
    pub inside: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// One margin per leg `P_{i-1} P_i`, `i = 1..n-1`.
    pub continuity_margins: Vec<f64>,
    /// `r_i - r_min` per interior point.
    pub radius_margins: Vec<f64>,
    /// Per interior point, the `[x, y]` distances outside its box.
    pub box_violations: Vec<[f64; 2]>,
    pub containment: Vec<StationContainment>,
    pub path_error: Option<String>,
    pub feasible: bool,
}

/// Leg margins `|P_i - P_{i-1}| - |P_{i-1} - F_{i-1}| - |P_i - E_i|`.
///
/// Corners whose tangent length cannot be computed contribute `-inf` to
/// both adjacent legs.
pub fn check_continuity(alignment: &Alignment) -> Vec<f64> {
    let pts = alignment.points();
    let radii = alignment.radii();
    let n = pts.len();
    let mut tangents = vec![0.0; n];
    for i in 1..n - 1 {
        tangents[i] = turn_angle(pts[i - 1], pts[i], pts[i + 1])
            .and_then(|theta| tangent_length(radii[i], theta))
            .unwrap_or(f64::INFINITY);
    }
    (1..n)
        .map(|i| {
            let m = pts[i].distance(pts[i - 1]) - tangents[i - 1] - tangents[i];
            if m.is_nan() {
                f64::NEG_INFINITY
            } else {
                m
            }
        })
        .collect()
}

pub fn check_radius(alignment: &Alignment, r_min: f64) -> Vec<f64> {
    let r = alignment.radii();
    r[1..r.len() - 1].iter().map(|ri| ri - r_min).collect()
}

pub fn check_boxes(alignment: &Alignment, boxes: &[BoundingBox]) -> Vec<[f64; 2]> {
    let pts = alignment.points();
    debug_assert_eq!(boxes.len() + 2, pts.len());
    pts[1..pts.len() - 1]
        .iter()
        .zip(boxes)
        .map(|(p, b)| {
            [
                (b.lo.x - p.x).max(p.x - b.hi.x).max(0.0),
                (b.lo.y - p.y).max(p.y - b.hi.y).max(0.0),
            ]
        })
        .collect()
}

/// Forward-chained station crossings. A missing crossing leaves the chainage
/// cursor where it was.
pub fn check_containment(path: &Path, corridor: &Corridor) -> Vec<StationContainment> {
    let mut prev = f64::NEG_INFINITY;
    corridor
        .stations
        .iter()
        .enumerate()
        .map(|(j, st)| match path_station_parameter(path, st, prev) {
            Ok(c) => {
                prev = c.chainage;
                StationContainment {
                    station: j,
                    t: Some(c.t),
                    chainage: Some(c.chainage),
                    inside: (0.0..=1.0).contains(&c.t),
                }
            }
            Err(_) => StationContainment {
                station: j,
                t: None,
                chainage: None,
                inside: false,
            },
        })
        .collect()
}

/// Full verdict for an alignment against a corridor.
pub fn assess(corridor: &Corridor, alignment: &Alignment) -> FeasibilityReport {
    let continuity_margins = check_continuity(alignment);
    let radius_margins = check_radius(alignment, corridor.r_min);
    let box_violations = check_boxes(alignment, &corridor.boxes);
    let (containment, path_error) = match build_path(alignment) {
        Ok(path) => (check_containment(&path, corridor), None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let feasible = path_error.is_none()
        && continuity_margins.iter().all(|&m| m >= 0.0)
        && radius_margins.iter().all(|&m| m >= 0.0)
        && box_violations.iter().all(|v| v[0] == 0.0 && v[1] == 0.0)
        && containment.iter().all(|c| c.inside);
    FeasibilityReport {
        continuity_margins,
        radius_margins,
        box_violations,
        containment,
        path_error,
        feasible,
    }
}

impl FeasibilityReport {
    /// Plain-text table for terminal output.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let flag = |ok: bool| if ok { "ok" } else { "VIOLATED" };
        let _ = writeln!(
            s,
            "{:<6} {:>12} {:>12} {:>10} {:>10}",
            "point", "continuity", "radius", "box dx", "box dy"
        );
        let n_legs = self.continuity_margins.len();
        for i in 1..=n_legs {
            let cont = self.continuity_margins[i - 1];
            let (rad, bx) = if i < n_legs {
                (
                    format!("{:.3}", self.radius_margins[i - 1]),
                    self.box_violations[i - 1],
                )
            } else {
                ("-".into(), [0.0, 0.0])
            };
            let _ = writeln!(
                s,
                "{:<6} {:>12.3} {:>12} {:>10.3} {:>10.3}",
                i, cont, rad, bx[0], bx[1]
            );
        }
        if let Some(e) = &self.path_error {
            let _ = writeln!(s, "path: {e}");
        } else {
            let _ = writeln!(
                s,
                "{:<8} {:>10} {:>12} {:>8}",
                "station", "t", "chainage", "status"
            );
            for c in &self.containment {
                let t = c.t.map_or("-".into(), |t| format!("{t:.4}"));
                let ch = c.chainage.map_or("-".into(), |t| format!("{t:.3}"));
                let _ = writeln!(
                    s,
                    "{:<8} {:>10} {:>12} {:>8}",
                    c.station,
                    t,
                    ch,
                    flag(c.inside)
                );
            }
        }
        let _ = writeln!(s, "feasible: {}", self.feasible);
        s
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table())
    }
}
