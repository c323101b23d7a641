//! SVG plan view: corridor boundary, ground contours and alignments.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{build_path, Alignment, PieceKind};
use crate::point::Point;
use crate::terrain::Corridor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stroke {
    Solid,
    Dashed,
    Dotted,
}

impl Stroke {
    fn dasharray(self) -> Option<&'static str> {
        match self {
            Stroke::Solid => None,
            Stroke::Dashed => Some("8 4"),
            Stroke::Dotted => Some("2 3"),
        }
    }

    /// Solid for the first layer, then alternating dashed and dotted.
    pub fn for_layer(index: usize) -> Self {
        match index {
            0 => Stroke::Solid,
            i if i % 2 == 1 => Stroke::Dashed,
            _ => Stroke::Dotted,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub label: String,
    pub alignment: Alignment,
    pub stroke: Stroke,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSpec {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    /// Contour spacing in meters; contours are skipped when `None`.
    pub contour_interval: Option<f64>,
    pub boundary: bool,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            width: 900.0,
            height: 500.0,
            margin: 20.0,
            contour_interval: Some(0.5),
            boundary: true,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("invalid render spec: {0}")]
    Spec(String),
    #[error("layer `{label}`: {reason}")]
    Layer { label: String, reason: String },
}

/// World-to-canvas map with a uniform scale and the `y` axis flipped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform {
    pub scale: f64,
    pub min: Point,
    pub max: Point,
    pub margin: f64,
    pub offset: (f64, f64),
}

impl Transform {
    pub fn fit(points: &[Point], spec: &RenderSpec) -> Self {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min = Point::new(min.x.min(p.x), min.y.min(p.y));
            max = Point::new(max.x.max(p.x), max.y.max(p.y));
        }
        let inner_w = spec.width - 2.0 * spec.margin;
        let inner_h = spec.height - 2.0 * spec.margin;
        let span_x = (max.x - min.x).max(1e-9);
        let span_y = (max.y - min.y).max(1e-9);
        let scale = (inner_w / span_x).min(inner_h / span_y);
        let offset = (
            0.5 * (inner_w - span_x * scale),
            0.5 * (inner_h - span_y * scale),
        );
        Self {
            scale,
            min,
            max,
            margin: spec.margin,
            offset,
        }
    }

    pub fn apply(&self, p: Point) -> (f64, f64) {
        (
            self.margin + self.offset.0 + (p.x - self.min.x) * self.scale,
            self.margin + self.offset.1 + (self.max.y - p.y) * self.scale,
        )
    }
}

/// Ground elevations on a regular `station x t` grid, with the plan
/// position of every node.
struct Grid {
    nodes: Vec<Vec<(Point, f64)>>,
}

impl Grid {
    fn from_corridor(c: &Corridor) -> Self {
        let n = c
            .stations
            .iter()
            .map(|s| s.samples.len())
            .max()
            .unwrap_or(2)
            .max(2);
        let nodes = c
            .stations
            .iter()
            .map(|st| {
                (0..n)
                    .map(|k| {
                        let t = k as f64 / (n - 1) as f64;
                        let h = st.ground_elevation(t).expect("t in [0, 1]");
                        (st.cross_section_point(t), h)
                    })
                    .collect()
            })
            .collect();
        Self { nodes }
    }

    fn range(&self) -> (f64, f64) {
        self.nodes
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, h)| {
                (lo.min(h), hi.max(h))
            })
    }
}

fn crossing(a: (Point, f64), b: (Point, f64), level: f64) -> Point {
    let w = (level - a.1) / (b.1 - a.1);
    a.0.lerp(b.0, w)
}

/// Marching squares for one level; returns line segments in plan coordinates.
fn contour_segments(grid: &Grid, level: f64) -> Vec<(Point, Point)> {
    let mut out = Vec::new();
    for j in 0..grid.nodes.len().saturating_sub(1) {
        let (r0, r1) = (&grid.nodes[j], &grid.nodes[j + 1]);
        for k in 0..r0.len() - 1 {
            // corners counter-clockwise in index space
            let c = [r0[k], r1[k], r1[k + 1], r0[k + 1]];
            let above: Vec<bool> = c.iter().map(|n| n.1 >= level).collect();
            let edge = |e: usize| crossing(c[e], c[(e + 1) % 4], level);
            let cut: Vec<usize> = (0..4).filter(|&e| above[e] != above[(e + 1) % 4]).collect();
            match cut.len() {
                2 => out.push((edge(cut[0]), edge(cut[1]))),
                4 => {
                    let center = c.iter().map(|n| n.1).sum::<f64>() / 4.0;
                    if (center >= level) == above[0] {
                        out.push((edge(0), edge(1)));
                        out.push((edge(2), edge(3)));
                    } else {
                        out.push((edge(3), edge(0)));
                        out.push((edge(1), edge(2)));
                    }
                }
                _ => {}
            }
        }
    }
    out
}

fn fmt_xy(t: &Transform, p: Point) -> String {
    let (x, y) = t.apply(p);
    format!("{x:.2} {y:.2}")
}

/// Renders the corridor and the given alignments as a standalone SVG
/// document. Each path piece becomes one `<path>` element; the boundary and
/// contours use `<polygon>` and `<polyline>`.
pub fn render_svg(
    corridor: &Corridor,
    layers: &[Layer],
    spec: &RenderSpec,
) -> Result<String, RenderError> {
    if !(spec.width > 2.0 * spec.margin && spec.height > 2.0 * spec.margin && spec.margin >= 0.0) {
        return Err(RenderError::Spec(
            "canvas must be larger than its margins".into(),
        ));
    }
    if let Some(iv) = spec.contour_interval {
        if !(iv > 0.0 && iv.is_finite()) {
            return Err(RenderError::Spec(
                "contour interval must be positive".into(),
            ));
        }
    }
    let paths = layers
        .iter()
        .map(|l| {
            build_path(&l.alignment).map_err(|e| RenderError::Layer {
                label: l.label.clone(),
                reason: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut extent: Vec<Point> = corridor
        .stations
        .iter()
        .flat_map(|s| [s.left_end, s.right_end])
        .collect();
    extent.extend([corridor.start, corridor.end]);
    extent.extend(
        layers
            .iter()
            .flat_map(|l| l.alignment.points().iter().copied()),
    );
    let tf = Transform::fit(&extent, spec);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = spec.width,
        h = spec.height
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    if let Some(iv) = spec.contour_interval {
        let grid = Grid::from_corridor(corridor);
        let (lo, hi) = grid.range();
        let _ = writeln!(
            svg,
            r##"<g class="contours" stroke="#b0b0b0" stroke-width="0.6" fill="none">"##
        );
        let mut level = (lo / iv).ceil() * iv;
        while level <= hi {
            for (a, b) in contour_segments(&grid, level) {
                let _ = writeln!(
                    svg,
                    r#"<polyline data-level="{level}" points="{} {}"/>"#,
                    fmt_xy(&tf, a).replace(' ', ","),
                    fmt_xy(&tf, b).replace(' ', ",")
                );
            }
            level += iv;
        }
        let _ = writeln!(svg, "</g>");
    }

    if spec.boundary {
        let ring: Vec<String> = corridor
            .stations
            .iter()
            .map(|s| s.left_end)
            .chain(corridor.stations.iter().rev().map(|s| s.right_end))
            .map(|p| fmt_xy(&tf, p).replace(' ', ","))
            .collect();
        let _ = writeln!(
            svg,
            r##"<polygon class="boundary" points="{}" fill="none" stroke="#3060c0" stroke-width="1.2"/>"##,
            ring.join(" ")
        );
    }

    for (layer, path) in layers.iter().zip(&paths) {
        let dash = layer
            .stroke
            .dasharray()
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        let _ = writeln!(
            svg,
            r#"<g class="alignment" data-label="{}" stroke="black" stroke-width="1.5" fill="none"{dash}>"#,
            escape(&layer.label)
        );
        for piece in &path.pieces {
            let start = fmt_xy(&tf, piece.start_point());
            let end = fmt_xy(&tf, piece.end_point());
            let d = match piece.kind {
                PieceKind::Segment { .. } => format!("M {start} L {end}"),
                PieceKind::Arc { radius, sweep, .. } => {
                    let r = radius * tf.scale;
                    let large = u8::from(sweep.abs() > std::f64::consts::PI);
                    // SVG's positive sweep is clockwise on screen
                    let dir = u8::from(sweep < 0.0);
                    format!("M {start} A {r:.2} {r:.2} 0 {large} {dir} {end}")
                }
            };
            let _ = writeln!(svg, r#"<path d="{d}"/>"#);
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
