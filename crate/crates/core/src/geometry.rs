//! Linear-circular horizontal alignment geometry.
//!
//! An alignment is a sequence of intersection points `P_0..P_{n-1}` with a
//! curve radius at every interior point. Each interior corner is rounded by
//! a circular arc tangent to both legs; the arc touches the incoming leg at
//! `E_i` and the outgoing leg at `F_i`. The realized [`Path`] is the chain
//! `P_0 -> E_1 ~> F_1 -> E_2 ~> ... ~> F_{n-2} -> P_{n-1}`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::point::Point;
use crate::terrain::Station;

/// Turns sharper than this (nearly a U-turn at a point) are rejected for
/// nonzero radii.
pub const THETA_MIN: f64 = 1e-3;
/// Angles within this of `pi` are treated as straight-through.
pub const STRAIGHT_TOL: f64 = 1e-9;
/// Minimum separation of consecutive intersection points.
pub const MIN_LEG: f64 = 1e-9;

const PARAM_EPS: f64 = 1e-12;
const ANGLE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("coincident points")]
    Coincident,
    #[error("collinear points do not form a triangle")]
    Collinear,
    #[error("turn angle {theta} rad is too sharp for a nonzero radius")]
    DegenerateTurn { theta: f64 },
    #[error("tangent length {tangent} exceeds leg length {leg}")]
    TangentOverrun { tangent: f64, leg: f64 },
    #[error("negative or non-finite radius {radius}")]
    BadRadius { radius: f64 },
    #[error("curves overlap on the leg ending at intersection point {index}")]
    Continuity { index: usize },
    #[error("intersection point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<GeometryError>,
    },
    #[error("invalid alignment: {0}")]
    InvalidAlignment(String),
    #[error("path does not cross the station line beyond chainage {prev}")]
    NoCrossing { prev: f64 },
}

/// Interior angle at `p` between the legs to `prev` and `next`, in `(0, pi]`.
pub fn turn_angle(prev: Point, p: Point, next: Point) -> Result<f64, GeometryError> {
    let u = prev - p;
    let v = next - p;
    if u.norm() == 0.0 || v.norm() == 0.0 || prev.distance(next) == 0.0 {
        return Err(GeometryError::Coincident);
    }
    let c = (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0);
    Ok(c.acos())
}

/// Distance from the intersection point to either tangent point.
pub fn tangent_length(r: f64, theta: f64) -> Result<f64, GeometryError> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(GeometryError::BadRadius { radius: r });
    }
    if r == 0.0 || PI - theta <= STRAIGHT_TOL {
        return Ok(0.0);
    }
    if theta <= THETA_MIN {
        return Err(GeometryError::DegenerateTurn { theta });
    }
    Ok(r / (theta / 2.0).tan())
}

/// Tangent points `(E, F)` of the arc of radius `r` rounding the corner at `p`.
pub fn tangent_points(
    prev: Point,
    p: Point,
    next: Point,
    r: f64,
) -> Result<(Point, Point), GeometryError> {
    let theta = turn_angle(prev, p, next)?;
    let lt = tangent_length(r, theta)?;
    let u = prev - p;
    let v = next - p;
    let leg = u.norm().min(v.norm());
    if lt > leg {
        return Err(GeometryError::TangentOverrun { tangent: lt, leg });
    }
    let (eu, ev) = (unit(u)?, unit(v)?);
    Ok((p + eu * lt, p + ev * lt))
}

/// Foot `Q` of the bisector of the angle at `p` on the opposite side
/// `prev`-`next`. It divides that side in the ratio `|U| : |V|`.
pub fn bisector_foot(prev: Point, p: Point, next: Point) -> Result<Point, GeometryError> {
    let u = prev - p;
    let v = next - p;
    let w = next - prev;
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 || w.norm() == 0.0 {
        return Err(GeometryError::Coincident);
    }
    if u.cross(v).abs() <= 1e-12 * nu * nv {
        return Err(GeometryError::Collinear);
    }
    let lb = nu * w.norm() / (nu + nv);
    Ok(prev + unit(w)? * lb)
}

/// Center of the arc of radius `r` rounding the corner at `p`.
pub fn curve_center(prev: Point, p: Point, next: Point, r: f64) -> Result<Point, GeometryError> {
    let theta = turn_angle(prev, p, next)?;
    let lt = tangent_length(r, theta)?;
    let leg = (prev - p).norm().min((next - p).norm());
    if lt > leg {
        return Err(GeometryError::TangentOverrun { tangent: lt, leg });
    }
    let q = bisector_foot(prev, p, next)?;
    let lx = lt / (theta / 2.0).cos();
    Ok(p + unit(q - p)? * lx)
}

fn unit(v: Point) -> Result<Point, GeometryError> {
    v.unit().ok_or(GeometryError::Coincident)
}

/// Intersection points with radii. Endpoint radii are always zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlignmentFile", into = "AlignmentFile")]
pub struct Alignment {
    points: Vec<Point>,
    radii: Vec<f64>,
}

/// On-disk shape: `{"points": [[x, y], ...], "radii": [r_1, ..., r_{n-2}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentFile {
    pub points: Vec<Point>,
    pub radii: Vec<f64>,
}

impl TryFrom<AlignmentFile> for Alignment {
    type Error = GeometryError;
    fn try_from(f: AlignmentFile) -> Result<Self, Self::Error> {
        Alignment::from_parts(f.points, f.radii)
    }
}

impl From<Alignment> for AlignmentFile {
    fn from(a: Alignment) -> Self {
        let n = a.points.len();
        AlignmentFile {
            radii: a.radii[1..n - 1].to_vec(),
            points: a.points,
        }
    }
}

impl Alignment {
    /// Builds an alignment from all points and the interior radii.
    pub fn from_parts(points: Vec<Point>, interior_radii: Vec<f64>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::InvalidAlignment(
                "at least two points required".into(),
            ));
        }
        if interior_radii.len() != points.len() - 2 {
            return Err(GeometryError::InvalidAlignment(format!(
                "{} points need {} radii, got {}",
                points.len(),
                points.len() - 2,
                interior_radii.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) || interior_radii.iter().any(|r| !r.is_finite()) {
            return Err(GeometryError::InvalidAlignment("non-finite value".into()));
        }
        if let Some(i) = points
            .windows(2)
            .position(|w| w[0].distance(w[1]) <= MIN_LEG)
        {
            return Err(GeometryError::InvalidAlignment(format!(
                "points {i} and {} coincide",
                i + 1
            )));
        }
        let mut radii = Vec::with_capacity(points.len());
        radii.push(0.0);
        radii.extend(interior_radii);
        radii.push(0.0);
        Ok(Self { points, radii })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// All radii, including the zero endpoint radii.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn polyline_length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PieceKind {
    Segment {
        from: Point,
        to: Point,
    },
    /// Arc about `center`; `sweep` is signed, positive counter-clockwise.
    Arc {
        center: Point,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathPiece {
    pub kind: PieceKind,
    pub start_chainage: f64,
    pub length: f64,
}

impl PathPiece {
    fn segment(from: Point, to: Point, start_chainage: f64) -> Self {
        Self {
            kind: PieceKind::Segment { from, to },
            start_chainage,
            length: from.distance(to),
        }
    }

    pub fn end_chainage(&self) -> f64 {
        self.start_chainage + self.length
    }

    pub fn start_point(&self) -> Point {
        self.point_at(0.0)
    }

    pub fn end_point(&self) -> Point {
        self.point_at(1.0)
    }

    /// Point at fraction `s` in `[0, 1]` of the piece length.
    pub fn point_at(&self, s: f64) -> Point {
        match self.kind {
            PieceKind::Segment { from, to } => from.lerp(to, s),
            PieceKind::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let a = start_angle + s * sweep;
                center + Point::new(a.cos(), a.sin()) * radius
            }
        }
    }

    /// Unit tangent direction at fraction `s`.
    pub fn direction_at(&self, s: f64) -> Point {
        match self.kind {
            PieceKind::Segment { from, to } => (to - from).unit().unwrap_or_default(),
            PieceKind::Arc {
                start_angle, sweep, ..
            } => {
                let a = start_angle + s * sweep;
                Point::new(-a.sin(), a.cos()) * sweep.signum()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Path {
    pub pieces: Vec<PathPiece>,
    pub total_length: f64,
}

/// Where a path crosses a station's cross-section line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Crossing {
    /// Cross-section parameter; outside `[0, 1]` means outside the corridor.
    pub t: f64,
    pub chainage: f64,
}

struct Corner {
    tangent: f64,
    radius: f64,
}

/// Realizes the linear-circular path of an alignment.
pub fn build_path(alignment: &Alignment) -> Result<Path, GeometryError> {
    let pts = alignment.points();
    let radii = alignment.radii();
    let n = pts.len();
    let at = |index: usize| {
        move |e: GeometryError| GeometryError::AtPoint {
            index,
            source: Box::new(e),
        }
    };

    let mut corners = Vec::with_capacity(n);
    corners.push(Corner {
        tangent: 0.0,
        radius: 0.0,
    });
    for i in 1..n - 1 {
        let theta = turn_angle(pts[i - 1], pts[i], pts[i + 1]).map_err(at(i))?;
        let tangent = tangent_length(radii[i], theta).map_err(at(i))?;
        corners.push(Corner {
            tangent,
            radius: if tangent > 0.0 { radii[i] } else { 0.0 },
        });
    }
    corners.push(Corner {
        tangent: 0.0,
        radius: 0.0,
    });

    for i in 1..n {
        let leg = pts[i].distance(pts[i - 1]);
        if leg < corners[i - 1].tangent + corners[i].tangent {
            return Err(GeometryError::Continuity { index: i });
        }
    }

    let mut pieces = Vec::with_capacity(2 * n);
    let mut chainage = 0.0;
    let mut cursor = pts[0];
    let mut push = |piece: PathPiece, chainage: &mut f64| {
        if piece.length > 0.0 {
            *chainage += piece.length;
            pieces.push(piece);
        }
    };
    for i in 1..n - 1 {
        let corner = &corners[i];
        if corner.radius == 0.0 {
            // sharp corner or straight-through
            push(PathPiece::segment(cursor, pts[i], chainage), &mut chainage);
            cursor = pts[i];
            continue;
        }
        let (prev, p, next) = (pts[i - 1], pts[i], pts[i + 1]);
        let (e, f) = tangent_points(prev, p, next, corner.radius).map_err(at(i))?;
        let c = curve_center(prev, p, next, corner.radius).map_err(at(i))?;
        push(PathPiece::segment(cursor, e, chainage), &mut chainage);

        let theta = turn_angle(prev, p, next).map_err(at(i))?;
        let turn = (p - prev).cross(next - p).signum();
        let sweep = turn * (PI - theta);
        let start_angle = (e.y - c.y).atan2(e.x - c.x);
        push(
            PathPiece {
                kind: PieceKind::Arc {
                    center: c,
                    radius: corner.radius,
                    start_angle,
                    sweep,
                },
                start_chainage: chainage,
                length: corner.radius * sweep.abs(),
            },
            &mut chainage,
        );
        cursor = f;
    }
    push(
        PathPiece::segment(cursor, pts[n - 1], chainage),
        &mut chainage,
    );

    Ok(Path {
        pieces,
        total_length: chainage,
    })
}

impl Path {
    /// All crossings of the infinite cross-section line with the path, in
    /// increasing chainage.
    pub fn crossings(&self, station: &Station) -> Vec<Crossing> {
        let u = station.left_end;
        let dir = station.right_end - station.left_end;
        let mut out = Vec::new();
        for piece in &self.pieces {
            match piece.kind {
                PieceKind::Segment { from, to } => {
                    let d = to - from;
                    let den = d.cross(dir);
                    if den.abs() <= 1e-14 * d.norm() * dir.norm() {
                        continue;
                    }
                    let w = u - from;
                    let s = w.cross(dir) / den;
                    let t = w.cross(d) / den;
                    if (-PARAM_EPS..=1.0 + PARAM_EPS).contains(&s) {
                        out.push(Crossing {
                            t,
                            chainage: piece.start_chainage + s.clamp(0.0, 1.0) * piece.length,
                        });
                    }
                }
                PieceKind::Arc {
                    center,
                    radius,
                    start_angle,
                    sweep,
                } => {
                    let w = u - center;
                    let a = dir.dot(dir);
                    let b = 2.0 * dir.dot(w);
                    let c = w.dot(w) - radius * radius;
                    let mut disc = b * b - 4.0 * a * c;
                    if disc < 0.0 {
                        if disc > -1e-12 * b * b {
                            disc = 0.0;
                        } else {
                            continue;
                        }
                    }
                    let sq = disc.sqrt();
                    let q = -0.5 * (b + b.signum() * sq);
                    let roots: Vec<f64> = if q == 0.0 {
                        vec![0.0]
                    } else if sq == 0.0 {
                        vec![-b / (2.0 * a)]
                    } else {
                        vec![q / a, c / q]
                    };
                    for t in roots {
                        let x = u + dir * t;
                        let phi = (x.y - center.y).atan2(x.x - center.x);
                        let mut delta = if sweep > 0.0 {
                            (phi - start_angle).rem_euclid(TAU)
                        } else {
                            (start_angle - phi).rem_euclid(TAU)
                        };
                        if delta > TAU - ANGLE_EPS {
                            delta = 0.0;
                        }
                        if delta <= sweep.abs() + ANGLE_EPS {
                            let frac = (delta / sweep.abs()).min(1.0);
                            out.push(Crossing {
                                t,
                                chainage: piece.start_chainage + frac * piece.length,
                            });
                        }
                    }
                }
            }
        }
        out.sort_by(|a, b| a.chainage.total_cmp(&b.chainage));
        out
    }
}

/// First crossing of the station's cross-section line strictly beyond
/// `prev_chainage`.
pub fn path_station_parameter(
    path: &Path,
    station: &Station,
    prev_chainage: f64,
) -> Result<Crossing, GeometryError> {
    path.crossings(station)
        .into_iter()
        .find(|c| c.chainage > prev_chainage)
        .ok_or(GeometryError::NoCrossing {
            prev: prev_chainage,
        })
}
